//! Dataset bundles, synthetic data, label binarization and inductive splits.
//!
//! A bundle is a directory holding `meta.json`, `edges.csv`, `features.csv`
//! (or `features.f32`), `labels.csv` and `masks.csv`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::ResponseConfig;
use crate::graph::{
    build_alpha_weights, build_alpha_weights_relaxed, build_sgc_weights, DirectedGraph, Edge, EmbeddingWeights,
    Labels, NodeFeatures,
};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// How embedding weights are derived from the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    /// Edge weights are the embedding weights; self-edges carry self-weights.
    Explicit,
    /// Nodes without in-neighbors keep full self-weight.
    Alpha { alpha: f64 },
    Sgc { k: usize, self_loops: bool },
}

impl WeightScheme {
    pub fn build(&self, graph: &DirectedGraph) -> Result<EmbeddingWeights> {
        match *self {
            WeightScheme::Explicit => {
                EmbeddingWeights::from_entries(graph.n(), graph.edges().iter().map(|e| (e.src, e.dst, e.weight)))
            }
            WeightScheme::Alpha { alpha } => build_alpha_weights_relaxed(graph, alpha),
            WeightScheme::Sgc { k, self_loops } => build_sgc_weights(graph, k, self_loops),
        }
    }
}

/// Maps original class ids to binary labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarizationMap {
    pub negative: BTreeSet<u32>,
    pub positive: BTreeSet<u32>,
}

impl BinarizationMap {
    pub fn new(negative: impl IntoIterator<Item = u32>, positive: impl IntoIterator<Item = u32>) -> Result<Self> {
        let map = Self { negative: negative.into_iter().collect(), positive: positive.into_iter().collect() };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        if let Some(c) = self.negative.intersection(&self.positive).next() {
            return invalid(format!("class {c} is both negative and positive"));
        }
        Ok(())
    }

    pub fn cora() -> Self {
        Self::new([0, 2, 3], [1, 4, 5, 6]).expect("disjoint")
    }

    pub fn citeseer() -> Self {
        Self::new([0, 2, 3], [1, 4, 5]).expect("disjoint")
    }

    pub fn pubmed() -> Self {
        Self::new([1, 2], [0]).expect("disjoint")
    }

    /// Map shipped for a named dataset (case-insensitive).
    pub fn named(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cora" => Some(Self::cora()),
            "citeseer" => Some(Self::citeseer()),
            "pubmed" => Some(Self::pubmed()),
            _ => None,
        }
    }

    pub fn label(&self, class: u32) -> Result<i8> {
        if self.negative.contains(&class) {
            Ok(-1)
        } else if self.positive.contains(&class) {
            Ok(1)
        } else {
            invalid(format!("class {class} is not covered by the binarization map"))
        }
    }
}

pub fn binarize(classes: &[u32], map: &BinarizationMap) -> Result<Labels> {
    Labels::new(classes.iter().map(|&c| map.label(c)).collect::<Result<_>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub format_version: u32,
    pub name: String,
    pub n: usize,
    pub feature_dim: usize,
    pub weights: WeightScheme,
    /// When present, `labels.csv` holds class ids mapped through it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_map: Option<BinarizationMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_names: Option<Vec<String>>,
    /// Response model the bundle was designed for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub graph: DirectedGraph,
    pub features: NodeFeatures,
    pub labels: Labels,
    /// Original class ids, kept when labels came through a class map.
    pub classes: Option<Vec<u32>>,
    /// Sorted, disjoint from `test_mask`.
    pub train_mask: Vec<usize>,
    pub test_mask: Vec<usize>,
    pub meta: BundleMeta,
}

/// A node subset with its own embedding weights; `eval` indexes the nodes
/// that count for loss and accuracy, while every node responds.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    /// Original node ids, ascending.
    pub nodes: Vec<usize>,
    pub features: NodeFeatures,
    pub labels: Labels,
    pub weights: EmbeddingWeights,
    /// Local indices, ascending.
    pub eval: Vec<usize>,
}

impl GraphView {
    pub fn eval_labels(&self) -> Vec<i8> {
        self.eval.iter().map(|&i| self.labels.get(i)).collect()
    }
}

impl DatasetBundle {
    pub fn new(
        graph: DirectedGraph,
        features: NodeFeatures,
        labels: Labels,
        train_mask: Vec<usize>,
        test_mask: Vec<usize>,
        meta: BundleMeta,
    ) -> Result<Self> {
        let b = Self { graph, features, labels, classes: None, train_mask, test_mask, meta };
        b.validate()?;
        Ok(b)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        let fail = |m: String| Err(Error::Format(m));
        if self.features.n() != n {
            return fail(format!("{} feature rows for {n} nodes", self.features.n()));
        }
        if self.labels.len() != n {
            return fail(format!("{} labels for {n} nodes", self.labels.len()));
        }
        if self.meta.n != n || self.meta.feature_dim != self.features.dim() {
            return fail("meta.json sizes disagree with the data".into());
        }
        for mask in [&self.train_mask, &self.test_mask] {
            if mask.windows(2).any(|w| w[0] >= w[1]) {
                return fail("masks must be strictly increasing".into());
            }
            if mask.last().is_some_and(|&i| i >= n) {
                return fail("mask node out of range".into());
            }
        }
        let train: BTreeSet<_> = self.train_mask.iter().collect();
        if let Some(i) = self.test_mask.iter().find(|i| train.contains(i)) {
            return fail(format!("node {i} is in both train and test masks"));
        }
        if let Some(names) = &self.meta.node_names {
            if names.len() != n {
                return fail(format!("{} node names for {n} nodes", names.len()));
            }
        }
        if let Some(classes) = &self.classes {
            let map = self
                .meta
                .class_map
                .as_ref()
                .ok_or_else(|| Error::Format("class ids without a class map".into()))?;
            if binarize(classes, map)? != self.labels {
                return fail("labels disagree with class ids under the class map".into());
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<EmbeddingWeights> {
        self.meta.weights.build(&self.graph)
    }

    fn view(&self, excluded: &[usize], eval_nodes: &[usize]) -> Result<GraphView> {
        let excluded: BTreeSet<_> = excluded.iter().copied().collect();
        let nodes: Vec<usize> = (0..self.n()).filter(|i| !excluded.contains(i)).collect();
        let weights = match self.meta.weights {
            WeightScheme::Explicit => self.weights()?.restrict(&nodes),
            ref scheme => scheme.build(&self.graph.induced(&nodes))?,
        };
        let mut local = vec![usize::MAX; self.n()];
        for (k, &i) in nodes.iter().enumerate() {
            local[i] = k;
        }
        Ok(GraphView {
            features: self.features.select_rows(&nodes),
            labels: self.labels.select(&nodes),
            eval: eval_nodes.iter().map(|&i| local[i]).collect(),
            weights,
            nodes,
        })
    }

    /// Every node except the test nodes; evaluates on train nodes.
    pub fn train_view(&self) -> Result<GraphView> {
        self.view(&self.test_mask, &self.train_mask)
    }

    /// Every node except the train nodes; evaluates on test nodes.
    pub fn test_view(&self) -> Result<GraphView> {
        self.view(&self.train_mask, &self.test_mask)
    }

    /// The whole graph, evaluated on every node.
    pub fn full_view(&self) -> Result<GraphView> {
        let all: Vec<usize> = (0..self.n()).collect();
        self.view(&[], &all)
    }
}

/// Two disjoint, identically distributed graphs of `n` nodes each: nodes
/// `0..n` form the train split and `n..2n` the test split.
///
/// Labels alternate `+1, -1`, features are `N(y, 1)`, and every node gets 5
/// same-class and 3 other-class in-neighbors from its own split.
pub fn generate_synthetic(n: usize, alpha: f64, seed: u64) -> Result<DatasetBundle> {
    if n < 16 || !n.is_multiple_of(2) {
        return invalid(format!("synthetic split size n = {n} must be even and at least 16"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("alpha = {alpha} outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(2 * n * 8);
    let mut labels = Vec::with_capacity(2 * n);
    let mut x = Vec::with_capacity(2 * n);
    for offset in [0, n] {
        let y: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        for &yi in &y {
            let z: f64 = StandardNormal.sample(&mut rng);
            x.push(f64::from(yi) + z);
        }
        // Class members occupy the even and odd local ids respectively.
        let half = n / 2;
        for i in 0..n {
            let same_parity = i % 2;
            let own_rank = i / 2;
            for k in sample(&mut rng, half - 1, 5) {
                let rank = if k >= own_rank { k + 1 } else { k };
                edges.push(Edge { src: offset + 2 * rank + same_parity, dst: offset + i, weight: 1.0 });
            }
            for k in sample(&mut rng, half, 3) {
                edges.push(Edge { src: offset + 2 * k + (1 - same_parity), dst: offset + i, weight: 1.0 });
            }
        }
        labels.extend(y);
    }
    let graph = DirectedGraph::new(2 * n, edges)?;
    build_alpha_weights(&graph, alpha)?;
    let meta = BundleMeta {
        format_version: BUNDLE_FORMAT_VERSION,
        name: format!("synthetic-n{n}-alpha{alpha}-seed{seed}"),
        n: 2 * n,
        feature_dim: 1,
        weights: WeightScheme::Alpha { alpha },
        class_map: None,
        node_names: None,
        response: Some(ResponseConfig::default()),
        provenance: vec![format!("generate_synthetic(n={n}, alpha={alpha}, seed={seed})")],
    };
    DatasetBundle::new(
        graph,
        NodeFeatures::new(2 * n, 1, x)?,
        Labels::new(labels)?,
        (0..n).collect(),
        (n..2 * n).collect(),
        meta,
    )
}

/// Drops every test node reachable from a train node by a directed path of
/// at most `k` edges. Returns the new bundle and the removed fraction of the
/// original test set.
pub fn make_inductive_split(bundle: &DatasetBundle, k: usize) -> Result<(DatasetBundle, f64)> {
    if k < 1 {
        return invalid("inductive split needs K >= 1");
    }
    let n = bundle.n();
    let out = bundle.graph.out_neighbors();
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &s in &bundle.train_mask {
        depth[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        if depth[u] == k {
            continue;
        }
        for &v in &out[u] {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let kept: Vec<usize> = bundle.test_mask.iter().copied().filter(|&t| depth[t] == usize::MAX).collect();
    let removed = bundle.test_mask.len() - kept.len();
    let fraction = if bundle.test_mask.is_empty() { 0.0 } else { removed as f64 / bundle.test_mask.len() as f64 };
    let mut split = bundle.clone();
    split.test_mask = kept;
    split.meta.provenance.push(format!("inductive split K={k}: removed {removed} test nodes"));
    Ok((split, fraction))
}

fn read_file(dir: &Path, name: &str) -> Result<String> {
    Ok(fs::read_to_string(dir.join(name))?)
}

fn format_err(file: &str, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{file}: {msg}"))
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<DatasetBundle> {
    let dir = dir.as_ref();
    let meta: BundleMeta = serde_json::from_str(&read_file(dir, "meta.json")?)?;
    if meta.format_version != BUNDLE_FORMAT_VERSION {
        return Err(format_err("meta.json", format!("unsupported format version {}", meta.format_version)));
    }
    if let Some(map) = &meta.class_map {
        map.validate().map_err(|e| format_err("meta.json", e))?;
    }
    let n = meta.n;

    let mut edges = Vec::new();
    let mut rdr = csv::Reader::from_path(dir.join("edges.csv"))?;
    for rec in rdr.deserialize() {
        edges.push(rec?);
    }
    let graph = DirectedGraph::new(n, edges).map_err(|e| format_err("edges.csv", e))?;

    let features = if dir.join("features.csv").exists() {
        let mut data = Vec::with_capacity(n * meta.feature_dim);
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(dir.join("features.csv"))?;
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != meta.feature_dim {
                return Err(format_err("features.csv", format!("row {rows} has {} values", rec.len())));
            }
            for v in rec.iter() {
                data.push(v.trim().parse::<f64>().map_err(|e| format_err("features.csv", e))?);
            }
            rows += 1;
        }
        if rows != n {
            return Err(format_err("features.csv", format!("{rows} rows for {n} nodes")));
        }
        data
    } else {
        let bytes = fs::read(dir.join("features.f32"))?;
        if bytes.len() != 4 * n * meta.feature_dim {
            return Err(format_err("features.f32", format!("{} bytes for {n} x {}", bytes.len(), meta.feature_dim)));
        }
        bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect()
    };
    let features = NodeFeatures::new(n, meta.feature_dim, features).map_err(|e| format_err("features", e))?;

    let raw: Vec<i64> = read_file(dir, "labels.csv")?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<i64>().map_err(|e| format_err("labels.csv", e)))
        .collect::<Result<_>>()?;
    if raw.len() != n {
        return Err(format_err("labels.csv", format!("{} labels for {n} nodes", raw.len())));
    }
    let (labels, classes) = match &meta.class_map {
        Some(map) => {
            let classes: Vec<u32> = raw
                .iter()
                .map(|&c| u32::try_from(c).map_err(|_| format_err("labels.csv", format!("class id {c}"))))
                .collect::<Result<_>>()?;
            let labels = binarize(&classes, map).map_err(|e| format_err("labels.csv", e))?;
            (labels, Some(classes))
        }
        None => {
            if let Some(c) = raw.iter().find(|&&c| c != 1 && c != -1) {
                return Err(format_err("labels.csv", format!("label {c} is not binary and no class map is given")));
            }
            (Labels::new(raw.iter().map(|&c| c as i8).collect())?, None)
        }
    };

    #[derive(Deserialize)]
    struct MaskRow {
        node_id: usize,
        split: String,
    }
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    let mut rdr = csv::Reader::from_path(dir.join("masks.csv"))?;
    for rec in rdr.deserialize() {
        let row: MaskRow = rec?;
        let set = match row.split.as_str() {
            "train" | "val" => &mut train,
            "test" => &mut test,
            other => return Err(format_err("masks.csv", format!("unknown split {other:?}"))),
        };
        set.insert(row.node_id);
    }

    let bundle = DatasetBundle {
        graph,
        features,
        labels,
        classes,
        train_mask: train.into_iter().collect(),
        test_mask: test.into_iter().collect(),
        meta,
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes a bundle in the text layout; reals use shortest round-trip form.
pub fn save_bundle(bundle: &DatasetBundle, dir: impl AsRef<Path>) -> Result<()> {
    bundle.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&bundle.meta)? + "\n")?;

    let mut w = csv::Writer::from_path(dir.join("edges.csv"))?;
    w.write_record(["src", "dst", "weight"])?;
    for e in bundle.graph.edges() {
        w.write_record([e.src.to_string(), e.dst.to_string(), e.weight.to_string()])?;
    }
    w.flush()?;

    let mut out = String::new();
    for row in bundle.features.rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(dir.join("features.csv"), out)?;
    let f32_path = dir.join("features.f32");
    if f32_path.exists() {
        fs::remove_file(f32_path)?;
    }

    let labels: Vec<String> = match (&bundle.meta.class_map, &bundle.classes) {
        (Some(_), Some(classes)) => classes.iter().map(u32::to_string).collect(),
        (Some(_), None) => return invalid("bundle has a class map but no class ids"),
        (None, _) => bundle.labels.as_slice().iter().map(i8::to_string).collect(),
    };
    fs::write(dir.join("labels.csv"), labels.join("\n") + "\n")?;

    let mut w = csv::Writer::from_path(dir.join("masks.csv"))?;
    w.write_record(["node_id", "split"])?;
    let mut rows: BTreeMap<usize, &str> = BTreeMap::new();
    rows.extend(bundle.train_mask.iter().map(|&i| (i, "train")));
    rows.extend(bundle.test_mask.iter().map(|&i| (i, "test")));
    for (i, split) in rows {
        w.write_record([i.to_string(), split.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
