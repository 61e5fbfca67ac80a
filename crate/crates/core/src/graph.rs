//! Graphs, embedding weights and linear graph classifiers.
//!
//! Node `i`'s embedding is `phi_i = sum_j w[j -> i] * x_j`, where the weight
//! `w[j -> i]` is the influence of node `j`'s features on node `i`. The
//! self-weight `w[i -> i]` is stored alongside the other incoming weights.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Weighted directed social graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl DirectedGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return invalid(format!("edge {}->{} out of range for n = {n}", e.src, e.dst));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return invalid(format!("edge {}->{} has weight {}", e.src, e.dst, e.weight));
            }
            if !seen.insert((e.src, e.dst)) {
                return invalid(format!("duplicate edge {}->{}", e.src, e.dst));
            }
        }
        Ok(Self { n, edges })
    }

    /// Unit-weight edges.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            n,
            pairs
                .iter()
                .map(|&(src, dst)| Edge { src, dst, weight: 1.0 })
                .collect(),
        )
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of incoming edges per node (self-edges excluded).
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in self.edges.iter().filter(|e| e.src != e.dst) {
            deg[e.dst] += 1;
        }
        deg
    }

    /// Number of outgoing edges per node (self-edges excluded).
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in self.edges.iter().filter(|e| e.src != e.dst) {
            deg[e.src] += 1;
        }
        deg
    }

    /// Adjacency lists of out-neighbors, sorted by id.
    pub fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.src].push(e.dst);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Copy of the graph without the edges leaving `sources`; self-edges stay.
    pub fn without_out_edges(&self, sources: &[usize]) -> Self {
        let cut: HashSet<usize> = sources.iter().copied().collect();
        Self {
            n: self.n,
            edges: self
                .edges
                .iter()
                .filter(|e| e.src == e.dst || !cut.contains(&e.src))
                .copied()
                .collect(),
        }
    }

    /// Subgraph induced by `nodes` (renumbered in the given order).
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.src] != usize::MAX && index[e.dst] != usize::MAX)
            .map(|e| Edge { src: index[e.src], dst: index[e.dst], weight: e.weight })
            .collect();
        Self { n: nodes.len(), edges }
    }
}

/// Sparse nonnegative influence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingWeights {
    /// `incoming[i]` lists `(j, w[j -> i])` sorted by `j`, zero entries dropped.
    incoming: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
}

impl EmbeddingWeights {
    /// Builds weights from `(j, i, w[j -> i])` triples.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut cols: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (j, i, w) in entries {
            if j >= n || i >= n {
                return invalid(format!("weight entry ({j}, {i}) out of range for n = {n}"));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return invalid(format!("weight entry ({j}, {i}) = {w} is not a nonnegative real"));
            }
            if cols[i].insert(j, w).is_some() {
                return invalid(format!("duplicate weight entry ({j}, {i})"));
            }
        }
        Ok(Self::from_columns(cols))
    }

    fn from_columns(cols: Vec<BTreeMap<usize, f64>>) -> Self {
        let self_weight = cols
            .iter()
            .enumerate()
            .map(|(i, c)| c.get(&i).copied().unwrap_or(0.0))
            .collect();
        let incoming = cols
            .into_iter()
            .map(|c| c.into_iter().filter(|&(_, w)| w != 0.0).collect())
            .collect();
        Self { incoming, self_weight }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            incoming: (0..n).map(|i| vec![(i, 1.0)]).collect(),
            self_weight: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.self_weight.len()
    }

    pub fn self_weight(&self, i: usize) -> f64 {
        self.self_weight[i]
    }

    /// `(j, w[j -> i])` pairs with nonzero weight, sorted by `j`.
    pub fn incoming(&self, i: usize) -> &[(usize, f64)] {
        &self.incoming[i]
    }

    /// `w[j -> i]`.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.incoming[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.incoming[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn column_sum(&self, i: usize) -> f64 {
        self.incoming[i].iter().map(|&(_, w)| w).sum()
    }

    /// All nonzero `(j, i, w[j -> i])` triples, ordered by `i` then `j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.incoming
            .iter()
            .enumerate()
            .flat_map(|(i, col)| col.iter().map(move |&(j, w)| (j, i, w)))
    }

    pub fn nnz(&self) -> usize {
        self.incoming.iter().map(Vec::len).sum()
    }

    /// Weights restricted to `nodes` (renumbered in the given order).
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let cols = nodes
            .iter()
            .map(|&old| {
                self.incoming[old]
                    .iter()
                    .filter(|&&(j, _)| index[j] != usize::MAX)
                    .map(|&(j, w)| (index[j], w))
                    .collect()
            })
            .collect();
        Self::from_columns(cols)
    }

    /// `out[j] = sum_i w[j -> i] * v[i]`, the transposed propagation.
    pub fn propagate_back(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (i, col) in self.incoming.iter().enumerate() {
            for &(j, w) in col {
                out[j] += w * v[i];
            }
        }
        out
    }

    /// `out[i] = sum_j w[j -> i] * v[j]`.
    pub fn propagate(&self, v: &[f64]) -> Vec<f64> {
        self.incoming
            .iter()
            .map(|col| col.iter().map(|&(j, w)| w * v[j]).sum())
            .collect()
    }
}

/// Row-major `n x dim` feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatures {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl NodeFeatures {
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("feature dimension must be at least 1");
        }
        if data.len() != n * dim {
            return invalid(format!("expected {} feature values, got {}", n * dim, data.len()));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return invalid(format!("non-finite feature value {v}"));
        }
        Ok(Self { n, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return invalid("ragged feature rows");
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    /// One-dimensional features.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { n, dim, data: vec![0.0; n * dim] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn select_rows(&self, nodes: &[usize]) -> Self {
        let mut data = Vec::with_capacity(nodes.len() * self.dim);
        for &i in nodes {
            data.extend_from_slice(self.row(i));
        }
        Self { n: nodes.len(), dim: self.dim, data }
    }
}

/// Binary labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels(Vec<i8>);

impl Labels {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v != 1 && v != -1) {
            return invalid(format!("label {v} is not in {{-1, +1}}"));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn select(&self, nodes: &[usize]) -> Self {
        Self(nodes.iter().map(|&i| self.0[i]).collect())
    }
}

/// `sign(0) = +1`.
pub fn sign(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

/// `h(x_i; x_-i) = sign(theta . phi_i + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGraphClassifier {
    pub theta: Vec<f64>,
    pub bias: f64,
}

impl LinearGraphClassifier {
    pub fn new(theta: Vec<f64>, bias: f64) -> Self {
        Self { theta, bias }
    }

    /// One-dimensional rule predicting +1 exactly when `phi >= threshold`.
    pub fn threshold(threshold: f64) -> Self {
        Self { theta: vec![1.0], bias: -threshold }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.theta, &self.theta)
    }

    pub fn score(&self, phi: &[f64]) -> f64 {
        dot(&self.theta, phi) + self.bias
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.theta.len() != dim {
            return invalid(format!(
                "classifier has dimension {}, features have {dim}",
                self.theta.len()
            ));
        }
        Ok(())
    }

    pub(crate) fn check_nondegenerate(&self) -> Result<f64> {
        let q = self.norm_sq();
        if q > 0.0 && q.is_finite() {
            Ok(q)
        } else {
            Err(Error::DegenerateClassifier)
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `D^-1/2 A^K D^-1/2` on the (optionally self-looped) weighted in-adjacency.
///
/// `A[i][j]` holds the weight of edge `j -> i`, so row `i` of the product
/// aggregates what flows into `i`. Degrees are weighted in-degrees of the
/// augmented matrix; a zero degree is replaced by 1.
pub fn build_sgc_weights(graph: &DirectedGraph, k: usize, add_self_loops: bool) -> Result<EmbeddingWeights> {
    if k == 0 {
        return invalid("SGC propagation depth K must be at least 1");
    }
    let n = graph.n();
    if n == 0 {
        return invalid("SGC weights need at least one node");
    }
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for e in graph.edges() {
        *rows[e.dst].entry(e.src).or_insert(0.0) += e.weight;
    }
    if add_self_loops {
        for (i, row) in rows.iter_mut().enumerate() {
            *row.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let deg: Vec<f64> = rows
        .iter()
        .map(|r| {
            let d: f64 = r.values().sum();
            if d > 0.0 {
                d
            } else {
                1.0
            }
        })
        .collect();

    let base = rows.clone();
    let mut power = rows;
    for _ in 1..k {
        power = base
            .iter()
            .map(|row| {
                let mut acc = BTreeMap::new();
                for (&l, &a) in row {
                    for (&j, &p) in &power[l] {
                        *acc.entry(j).or_insert(0.0) += a * p;
                    }
                }
                acc
            })
            .collect();
    }

    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let cols = power
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .map(|(j, p)| (j, inv_sqrt[i] * p * inv_sqrt[j]))
                .collect()
        })
        .collect();
    Ok(EmbeddingWeights::from_columns(cols))
}

/// Global-interpolation weights: `w[i -> i] = 1 - alpha` and
/// `w[j -> i] = alpha / in_deg(i)` for each in-neighbor `j`.
pub fn build_alpha_weights(graph: &DirectedGraph, alpha: f64) -> Result<EmbeddingWeights> {
    alpha_weights(graph, alpha, false)
}

/// Like [`build_alpha_weights`], but a node without in-neighbors keeps
/// `w[i -> i] = 1` instead of being rejected.
pub fn build_alpha_weights_relaxed(graph: &DirectedGraph, alpha: f64) -> Result<EmbeddingWeights> {
    alpha_weights(graph, alpha, true)
}

fn alpha_weights(graph: &DirectedGraph, alpha: f64, relaxed: bool) -> Result<EmbeddingWeights> {
    if !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("alpha = {alpha} outside [0, 1]"));
    }
    let n = graph.n();
    let mut in_nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for e in graph.edges().iter().filter(|e| e.src != e.dst) {
        in_nbrs[e.dst].insert(e.src);
    }
    let mut cols: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, nbrs) in in_nbrs.iter().enumerate() {
        if alpha == 0.0 {
            cols[i].insert(i, 1.0);
            continue;
        }
        if nbrs.is_empty() {
            if relaxed {
                cols[i].insert(i, 1.0);
                continue;
            }
            return invalid(format!("node {i} has no in-neighbors but alpha = {alpha} > 0"));
        }
        cols[i].insert(i, 1.0 - alpha);
        let w = alpha / nbrs.len() as f64;
        for &j in nbrs {
            cols[i].insert(j, w);
        }
    }
    Ok(EmbeddingWeights::from_columns(cols))
}

/// Row `i` of the result is `sum_j w[j -> i] * x_j`.
pub fn embed(x: &NodeFeatures, w: &EmbeddingWeights) -> Result<NodeFeatures> {
    if x.n() != w.n() {
        return invalid(format!("{} feature rows but weights over {} nodes", x.n(), w.n()));
    }
    let mut out = NodeFeatures::zeros(x.n(), x.dim());
    for i in 0..x.n() {
        let dst = out.row_mut(i);
        for &(j, wji) in w.incoming(i) {
            for (d, s) in dst.iter_mut().zip(x.row(j)) {
                *d += wji * s;
            }
        }
    }
    Ok(out)
}

pub fn score_and_predict(clf: &LinearGraphClassifier, phi: &NodeFeatures) -> Result<(Vec<f64>, Labels)> {
    clf.check_dim(phi.dim())?;
    let scores: Vec<f64> = phi.rows().map(|r| clf.score(r)).collect();
    let labels = Labels(scores.iter().map(|&s| sign(s)).collect());
    Ok((scores, labels))
}

/// Scores `theta . phi_i + bias` computed as `sum_j w[j -> i] (theta . x_j) + bias`.
pub fn scores(clf: &LinearGraphClassifier, x: &NodeFeatures, w: &EmbeddingWeights) -> Result<Vec<f64>> {
    clf.check_dim(x.dim())?;
    if x.n() != w.n() {
        return invalid(format!("{} feature rows but weights over {} nodes", x.n(), w.n()));
    }
    let proj: Vec<f64> = x.rows().map(|r| dot(&clf.theta, r)).collect();
    Ok(w.propagate(&proj).into_iter().map(|s| s + clf.bias).collect())
}

pub fn predict(clf: &LinearGraphClassifier, x: &NodeFeatures, w: &EmbeddingWeights) -> Result<Labels> {
    Ok(Labels(scores(clf, x, w)?.into_iter().map(sign).collect()))
}

/// Orients each undirected edge from its higher-degree endpoint to the lower
/// one; equal degrees orient from the lower id to the higher id.
pub fn direct_edges_by_degree(n: usize, undirected: &[(usize, usize)]) -> Result<DirectedGraph> {
    let mut pairs = BTreeSet::new();
    for &(u, v) in undirected {
        if u == v {
            return invalid(format!("self-edge on node {u}"));
        }
        if u >= n || v >= n {
            return invalid(format!("edge ({u}, {v}) out of range for n = {n}"));
        }
        pairs.insert((u.min(v), u.max(v)));
    }
    let mut deg = vec![0usize; n];
    for &(u, v) in &pairs {
        deg[u] += 1;
        deg[v] += 1;
    }
    let edges = pairs
        .into_iter()
        .map(|(lo, hi)| {
            let (src, dst) = if deg[hi] > deg[lo] { (hi, lo) } else { (lo, hi) };
            Edge { src, dst, weight: 1.0 }
        })
        .collect();
    DirectedGraph::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> DirectedGraph {
        DirectedGraph::from_pairs(3, &[(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap()
    }

    #[test]
    fn sgc_single_node() {
        let w = build_sgc_weights(&DirectedGraph::empty(1), 1, true).unwrap();
        assert_eq!(w.get(0, 0), 1.0);
    }

    #[test]
    fn sgc_path_hand_values() {
        let w = build_sgc_weights(&path3(), 1, true).unwrap();
        assert!((w.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((w.get(0, 1) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((w.get(1, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((w.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(w.get(0, 2), 0.0);
    }

    #[test]
    fn sgc_rejects_bad_args() {
        assert!(matches!(build_sgc_weights(&path3(), 0, true), Err(Error::InvalidArgument(_))));
        assert!(build_sgc_weights(&DirectedGraph::empty(0), 1, true).is_err());
    }

    #[test]
    fn sgc_isolated_without_self_loops() {
        let w = build_sgc_weights(&DirectedGraph::empty(2), 1, false).unwrap();
        assert_eq!(w.self_weight(0), 0.0);
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn alpha_zero_is_identity() {
        let w = build_alpha_weights(&path3(), 0.0).unwrap();
        assert_eq!(w, EmbeddingWeights::identity(3));
        // isolated nodes are fine without graph reliance
        assert!(build_alpha_weights(&DirectedGraph::empty(3), 0.0).is_ok());
    }

    #[test]
    fn alpha_one_single_neighbor() {
        let g = DirectedGraph::from_pairs(2, &[(0, 1), (1, 0)]).unwrap();
        let w = build_alpha_weights(&g, 1.0).unwrap();
        assert_eq!(w.self_weight(1), 0.0);
        assert_eq!(w.get(0, 1), 1.0);
    }

    #[test]
    fn alpha_eight_neighbors() {
        let pairs: Vec<_> = (1..9).map(|j| (j, 0)).collect();
        let mut pairs = pairs;
        pairs.extend((1..9).map(|j| (0, j)));
        let g = DirectedGraph::from_pairs(9, &pairs).unwrap();
        let w = build_alpha_weights(&g, 0.7).unwrap();
        assert!((w.self_weight(0) - 0.3).abs() < 1e-15);
        for j in 1..9 {
            assert!((w.get(j, 0) - 0.0875).abs() < 1e-15);
        }
        assert!((w.column_sum(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_errors() {
        assert!(build_alpha_weights(&path3(), 1.5).is_err());
        assert!(build_alpha_weights(&path3(), -0.1).is_err());
        let g = DirectedGraph::from_pairs(3, &[(0, 1)]).unwrap();
        assert!(build_alpha_weights(&g, 0.5).is_err());
        let w = build_alpha_weights_relaxed(&g, 0.5).unwrap();
        assert_eq!(w.self_weight(0), 1.0);
        assert_eq!(w.self_weight(1), 0.5);
    }

    #[test]
    fn embed_identity_and_hitchhike_value() {
        let x = NodeFeatures::scalar(&[-3.0, -2.1, -0.5]).unwrap();
        assert_eq!(embed(&x, &EmbeddingWeights::identity(3)).unwrap(), x);
        // k = 0, i = 1, j = 2
        let w = EmbeddingWeights::from_entries(
            3,
            [(0, 0, 1.0), (1, 1, 0.4), (2, 1, 0.6), (2, 2, 2.0 / 3.0), (0, 2, 1.0 / 3.0)],
        )
        .unwrap();
        let phi = embed(&x, &w).unwrap();
        assert!((phi.row(2)[0] + 4.0 / 3.0).abs() < 1e-12);
        assert!((phi.row(1)[0] + 1.14).abs() < 1e-12);
    }

    #[test]
    fn embed_dimension_mismatch() {
        let x = NodeFeatures::scalar(&[1.0, 2.0]).unwrap();
        assert!(embed(&x, &EmbeddingWeights::identity(3)).is_err());
    }

    #[test]
    fn predict_boundary_is_positive() {
        let clf = LinearGraphClassifier::new(vec![1.0], 0.0);
        let phi = NodeFeatures::scalar(&[0.0, 0.06, -1.0]).unwrap();
        let (s, y) = score_and_predict(&clf, &phi).unwrap();
        assert_eq!(s[0], 0.0);
        assert_eq!(y.as_slice(), &[1, 1, -1]);
        let bad = LinearGraphClassifier::new(vec![1.0, 2.0], 0.0);
        assert!(score_and_predict(&bad, &phi).is_err());
    }

    #[test]
    fn orient_star_and_tie() {
        let star: Vec<_> = (1..5).map(|l| (0, l)).collect();
        let g = direct_edges_by_degree(5, &star).unwrap();
        assert!(g.edges().iter().all(|e| e.src == 0));

        let g = direct_edges_by_degree(8, &[(7, 3)]).unwrap();
        assert_eq!((g.edges()[0].src, g.edges()[0].dst), (3, 7));

        assert!(direct_edges_by_degree(3, &[(1, 1)]).is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(DirectedGraph::from_pairs(2, &[(0, 2)]).is_err());
        assert!(DirectedGraph::from_pairs(2, &[(0, 1), (0, 1)]).is_err());
        assert!(DirectedGraph::new(2, vec![Edge { src: 0, dst: 1, weight: -1.0 }]).is_err());
        assert!(Labels::new(vec![1, 0]).is_err());
    }
}
