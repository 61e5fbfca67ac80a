//! Small hand-built instances with known response dynamics.

use crate::datasets::{BundleMeta, DatasetBundle, WeightScheme, BUNDLE_FORMAT_VERSION};
use crate::error::{invalid, Error, Result};
use crate::exact::{simulate_dynamics, DynamicsTrace, ResponseConfig};
use crate::graph::{DirectedGraph, Edge, EmbeddingWeights, Labels, LinearGraphClassifier, NodeFeatures};

/// Tolerance used by every construction, small enough that landing points
/// match the exact boundary values to 1e-9.
pub const CONSTRUCTION_TOL: f64 = 1e-10;

/// What a construction is built to do, checked by [`ConstructionInstance::verify`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedOutcome {
    pub move_rounds: Option<Vec<Option<usize>>>,
    pub rounds: Option<usize>,
    pub final_predictions: Option<Vec<i8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionInstance {
    pub name: String,
    pub weights: EmbeddingWeights,
    pub features: NodeFeatures,
    pub labels: Option<Labels>,
    pub classifier: LinearGraphClassifier,
    pub response: ResponseConfig,
    pub node_names: Vec<String>,
    /// Nodes over which accuracy claims are stated.
    pub eval_nodes: Vec<usize>,
    pub expected: ExpectedOutcome,
}

impl ConstructionInstance {
    pub fn n(&self) -> usize {
        self.weights.n()
    }

    /// Graph whose edges carry the embedding weights, self-edges included.
    pub fn graph(&self) -> DirectedGraph {
        let edges = self.weights.entries().map(|(src, dst, weight)| Edge { src, dst, weight }).collect();
        DirectedGraph::new(self.n(), edges).expect("weights are valid edges")
    }

    pub fn simulate(&self) -> Result<DynamicsTrace> {
        simulate_dynamics(&self.classifier, &self.features, &self.weights, &self.response)
    }

    /// Runs the dynamics and checks every annotation against the trace.
    pub fn verify(&self) -> Result<DynamicsTrace> {
        let trace = self.simulate()?;
        let fail = |what: &str| Err(Error::InternalInvariant(format!("{}: {what} differs from annotation", self.name)));
        if let Some(m) = &self.expected.move_rounds {
            if trace.moved_rounds() != m.as_slice() {
                return fail("move rounds");
            }
        }
        if self.expected.rounds.is_some_and(|r| r != trace.rounds()) {
            return fail("round count");
        }
        if let Some(p) = &self.expected.final_predictions {
            if trace.final_predictions().as_slice() != p.as_slice() {
                return fail("final predictions");
            }
        }
        Ok(trace)
    }

    /// Bundle with explicit weights whose test mask is the eval set.
    /// Undefined labels are written as -1.
    pub fn to_bundle(&self) -> Result<DatasetBundle> {
        let mut provenance = vec![format!("construction {}", self.name)];
        let labels = match &self.labels {
            Some(l) => l.clone(),
            None => {
                provenance.push("labels undefined for this construction; stored as -1".into());
                Labels::new(vec![-1; self.n()])?
            }
        };
        let meta = BundleMeta {
            format_version: BUNDLE_FORMAT_VERSION,
            name: self.name.clone(),
            n: self.n(),
            feature_dim: self.features.dim(),
            weights: WeightScheme::Explicit,
            class_map: None,
            node_names: Some(self.node_names.clone()),
            response: Some(self.response.clone()),
            provenance,
        };
        DatasetBundle::new(self.graph(), self.features.clone(), labels, Vec::new(), self.eval_nodes.clone(), meta)
    }
}

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Cost scale whose largest affordable move is 3.
fn distance_three() -> ResponseConfig {
    ResponseConfig::from_max_distance(3.0).expect("positive").with_tol(CONSTRUCTION_TOL)
}

/// Three users `k = 0`, `i = 1`, `j = 2`: `j` crosses in round 1 and drags
/// `i` across without `i` moving.
pub fn hitchhike_example() -> ConstructionInstance {
    let weights = EmbeddingWeights::from_entries(
        3,
        [(0, 0, 1.0), (1, 1, 0.4), (2, 1, 0.6), (2, 2, 2.0 / 3.0), (0, 2, 1.0 / 3.0)],
    )
    .expect("valid");
    ConstructionInstance {
        name: "hitchhike".into(),
        weights,
        features: NodeFeatures::scalar(&[-3.0, -2.1, -0.5]).expect("finite"),
        labels: None,
        classifier: LinearGraphClassifier::threshold(0.0),
        response: ResponseConfig::default().with_tol(CONSTRUCTION_TOL),
        node_names: vec!["k".into(), "i".into(), "j".into()],
        eval_nodes: vec![0, 1, 2],
        expected: ExpectedOutcome {
            move_rounds: Some(vec![None, None, Some(1)]),
            rounds: Some(1),
            final_predictions: Some(vec![-1, 1, 1]),
        },
    }
}

fn cascade_feature(i: usize) -> f64 {
    if i % 3 == 1 {
        2.0
    } else {
        -4.0
    }
}

/// Chain `0 .. n+1` where node `i` crosses exactly in round `i`.
///
/// Inner nodes average themselves and both chain neighbors; node 0 averages
/// itself and node 1; node `n+1` only feeds node `n`. Labels are -1 on the
/// inner nodes, which form the eval set.
pub fn cascade_graph(n: usize) -> Result<ConstructionInstance> {
    if n < 1 {
        return invalid("cascade needs n >= 1");
    }
    let mut entries = vec![(0, 0, 0.5), (1, 0, 0.5), (n + 1, n + 1, 0.5)];
    for i in 1..=n {
        for j in [i - 1, i, i + 1] {
            entries.push((j, i, 1.0 / 3.0));
        }
    }
    let mut x = vec![-1.0];
    x.extend((1..=n + 1).map(cascade_feature));
    let mut labels = vec![1i8; n + 2];
    for l in &mut labels[1..=n] {
        *l = -1;
    }
    let mut moves = vec![None; n + 2];
    for (i, m) in moves.iter_mut().enumerate().take(n + 1).skip(1) {
        *m = Some(i);
    }
    Ok(ConstructionInstance {
        name: format!("cascade-{n}"),
        weights: EmbeddingWeights::from_entries(n + 2, entries)?,
        features: NodeFeatures::scalar(&x)?,
        labels: Some(Labels::new(labels)?),
        classifier: LinearGraphClassifier::threshold(0.0),
        response: distance_three(),
        node_names: numbered(n + 2),
        eval_nodes: (1..=n).collect(),
        expected: ExpectedOutcome { move_rounds: Some(moves), rounds: Some(n), final_predictions: None },
    })
}

/// Cascade of length `n` plus `n - k` extra nodes that all move in round `k`.
///
/// Each extra node listens to node `k - 1` with weight 1/2 and is placed so
/// that it can afford to cross only once node `k - 1` has moved (for
/// `k = 1`, node 0, which never moves, already suffices).
pub fn cascade_with_late_movers(n: usize, k: usize) -> Result<ConstructionInstance> {
    if k < 1 || k > n {
        return invalid(format!("late movers need 1 <= k <= n, got k = {k}, n = {n}"));
    }
    let base = cascade_graph(n)?;
    let anchor = k - 1;
    let x_anchor = base.features.row(anchor)[0];
    let x_extra = if anchor == 0 { -3.0 - x_anchor } else { -6.0 - x_anchor };
    let extra = n - k;
    let total = n + 2 + extra;

    let mut entries: Vec<_> = base.weights.entries().collect();
    let mut x: Vec<f64> = base.features.as_slice().to_vec();
    let mut labels = base.labels.as_ref().expect("cascade has labels").as_slice().to_vec();
    let mut moves = base.expected.move_rounds.clone().expect("cascade has moves");
    for j in n + 2..total {
        entries.push((anchor, j, 0.5));
        entries.push((j, j, 0.5));
        x.push(x_extra);
        labels.push(-1);
        moves.push(Some(k));
    }
    let mut names = base.node_names.clone();
    names.extend((n + 2..total).map(|j| format!("late{}", j - n - 2)));
    Ok(ConstructionInstance {
        name: format!("cascade-{n}-late-{k}"),
        weights: EmbeddingWeights::from_entries(total, entries)?,
        features: NodeFeatures::scalar(&x)?,
        labels: Some(Labels::new(labels)?),
        node_names: names,
        eval_nodes: (1..=n).chain(n + 2..total).collect(),
        expected: ExpectedOutcome { move_rounds: Some(moves), rounds: Some(n), final_predictions: None },
        ..base
    })
}

fn chain_triple(name: &str, x0: f64) -> ConstructionInstance {
    let weights = EmbeddingWeights::from_entries(
        3,
        [
            (0, 0, 0.5),
            (1, 0, 0.5),
            (0, 1, 1.0 / 3.0),
            (1, 1, 1.0 / 3.0),
            (2, 1, 1.0 / 3.0),
            (1, 2, 0.5),
            (2, 2, 0.5),
        ],
    )
    .expect("valid");
    ConstructionInstance {
        name: name.into(),
        weights,
        features: NodeFeatures::scalar(&[x0, -1.0, -1.0]).expect("finite"),
        labels: Some(Labels::new(vec![1, -1, -1]).expect("binary")),
        classifier: LinearGraphClassifier::threshold(0.0),
        response: ResponseConfig::default().with_tol(CONSTRUCTION_TOL),
        node_names: numbered(3),
        eval_nodes: vec![0, 1, 2],
        expected: ExpectedOutcome::default(),
    }
}

/// Two three-node chains labelled `(+1, -1, -1)`: with `x_0 = 1` no
/// threshold is right on all three nodes once users respond; with
/// `x_0 = 1.2` the threshold 1.1 is. Both carry the threshold-0 classifier.
pub fn gap_examples() -> (ConstructionInstance, ConstructionInstance) {
    let large = chain_triple("large-gap", 1.0);
    let mut none = chain_triple("no-gap", 1.2);
    none.classifier = LinearGraphClassifier::threshold(1.1);
    none.expected = ExpectedOutcome {
        move_rounds: Some(vec![Some(1), None, None]),
        rounds: Some(1),
        final_predictions: Some(vec![1, -1, -1]),
    };
    (large, none)
}

/// Complete graph on `n` nodes with every weight `1/n`.
pub fn clique(n: usize, features: NodeFeatures, clf: LinearGraphClassifier) -> Result<ConstructionInstance> {
    if n < 2 {
        return invalid("clique needs n >= 2");
    }
    if features.n() != n {
        return invalid(format!("{} feature rows for a clique of {n}", features.n()));
    }
    clf.check_dim(features.dim())?;
    let w = 1.0 / n as f64;
    let entries = (0..n).flat_map(|i| (0..n).map(move |j| (j, i, w)));
    Ok(ConstructionInstance {
        name: format!("clique-{n}"),
        weights: EmbeddingWeights::from_entries(n, entries)?,
        features,
        labels: None,
        classifier: clf,
        response: ResponseConfig::default(),
        node_names: numbered(n),
        eval_nodes: (0..n).collect(),
        expected: ExpectedOutcome::default(),
    })
}

/// The cascade closed into a cycle of `n + 3` nodes through an extra node
/// `n + 2` with feature -8; all weights 1/3. Takes `n` rounds although the
/// diameter is only about half that.
pub fn circular_diameter_graph(n: usize) -> Result<ConstructionInstance> {
    if n < 3 {
        return invalid("circular diameter construction needs n >= 3");
    }
    let total = n + 3;
    let third = 1.0 / 3.0;
    let mut entries = Vec::new();
    for i in 0..total {
        let prev = (i + total - 1) % total;
        let next = (i + 1) % total;
        for j in [prev, i, next] {
            entries.push((j, i, third));
        }
    }
    let mut x = vec![-1.0];
    x.extend((1..=n + 1).map(cascade_feature));
    x.push(-8.0);
    let mut moves = vec![None; total];
    for (i, m) in moves.iter_mut().enumerate().take(n + 1).skip(1) {
        *m = Some(i);
    }
    Ok(ConstructionInstance {
        name: format!("circular-{n}"),
        weights: EmbeddingWeights::from_entries(total, entries)?,
        features: NodeFeatures::scalar(&x)?,
        labels: None,
        classifier: LinearGraphClassifier::threshold(0.0),
        response: distance_three(),
        node_names: numbered(total),
        eval_nodes: (0..total).collect(),
        expected: ExpectedOutcome { move_rounds: Some(moves), rounds: Some(n), final_predictions: None },
    })
}

/// Named construction with default size parameters, as used by the CLI.
pub fn by_name(name: &str, n: Option<usize>, k: Option<usize>) -> Result<ConstructionInstance> {
    match name {
        "hitchhike" => Ok(hitchhike_example()),
        "cascade" => cascade_graph(n.unwrap_or(3)),
        "late-movers" => {
            let n = n.unwrap_or(5);
            cascade_with_late_movers(n, k.unwrap_or(n.min(3)))
        }
        "large-gap" => Ok(gap_examples().0),
        "no-gap" => Ok(gap_examples().1),
        "circular" => circular_diameter_graph(n.unwrap_or(5)),
        other => invalid(format!(
            "unknown construction {other:?}; expected hitchhike, cascade, late-movers, large-gap, no-gap or circular"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::embed;

    #[test]
    fn hitchhike_trace() {
        let c = hitchhike_example();
        let phi = embed(&c.features, &c.weights).unwrap();
        let expect = [-3.0, -1.14, -4.0 / 3.0];
        for i in 0..3 {
            assert!((phi.row(i)[0] - expect[i]).abs() < 1e-12);
        }
        let t = c.verify().unwrap();
        assert!((t.final_features().row(2)[0] - 1.5).abs() < 1e-9);
        assert_eq!(t.hitchhikers(), vec![1]);
    }

    #[test]
    fn cascades_verify() {
        for n in 1..=12 {
            let c = cascade_graph(n).unwrap();
            let t = c.verify().unwrap();
            for i in 1..=n {
                let target = if i % 3 == 1 { 5.0 } else { -1.0 };
                assert!((t.final_features().row(i)[0] - target).abs() < 1e-9, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn late_movers_verify() {
        for (n, k) in [(5, 3), (4, 4), (6, 1), (6, 2), (9, 5)] {
            let c = cascade_with_late_movers(n, k).unwrap();
            assert_eq!(c.n(), n + 2 + n - k);
            c.verify().unwrap();
        }
        assert!(cascade_with_late_movers(3, 0).is_err());
        assert!(cascade_with_late_movers(3, 4).is_err());
    }

    #[test]
    fn no_gap_landing() {
        let (_, none) = gap_examples();
        let t = none.verify().unwrap();
        assert!((t.final_features().row(0)[0] - 3.2).abs() < 1e-9);
    }

    #[test]
    fn circular_verifies() {
        for n in [3, 5, 8, 11] {
            circular_diameter_graph(n).unwrap().verify().unwrap();
        }
        assert!(circular_diameter_graph(2).is_err());
    }

    #[test]
    fn clique_weights_are_uniform() {
        let c = clique(4, NodeFeatures::scalar(&[1.0; 4]).unwrap(), LinearGraphClassifier::threshold(0.0)).unwrap();
        assert!(c.weights.entries().all(|(_, _, w)| w == 0.25));
        assert_eq!(c.weights.nnz(), 16);
        assert_eq!(c.simulate().unwrap().rounds(), 0);
    }

    #[test]
    fn bundles_carry_construction() {
        let b = hitchhike_example().to_bundle().unwrap();
        assert_eq!(b.weights().unwrap(), hitchhike_example().weights);
        assert_eq!(b.meta.node_names.as_deref().unwrap()[2], "j");
        assert!(by_name("nope", None, None).is_err());
    }
}
