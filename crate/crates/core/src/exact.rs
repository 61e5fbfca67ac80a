//! Exact myopic best-response dynamics.
//!
//! Every round is synchronous: each user reads the features of the previous
//! round, and a user classified negatively moves to the decision boundary
//! whenever the cost of getting there, plus what they already spent, fits in
//! the budget of 2 (the largest possible prediction gain).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{dot, scores, sign, EmbeddingWeights, Labels, LinearGraphClassifier, NodeFeatures};

/// Largest gain a user can get from flipping their prediction.
pub const BUDGET: f64 = 2.0;

/// Absolute slack on the budget comparison, absorbing rounding in moves that
/// cost exactly the budget.
pub const BUDGET_SLACK: f64 = 1e-9;

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseConfig {
    /// Cost scale: moving by `delta` costs `beta * |delta|_2`.
    /// Infinite (no movement) is stored as `null`.
    #[serde(with = "serde_beta")]
    pub beta: f64,
    /// Users land at score `tol` rather than exactly on the boundary.
    pub tol: f64,
    /// Defaults to `n + 1` when unset.
    #[serde(default)]
    pub max_rounds: Option<usize>,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        Self { beta: 1.0, tol: 1e-6, max_rounds: None }
    }
}

impl ResponseConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return invalid(format!("cost scale beta = {beta} must be positive"));
        }
        Ok(Self { beta, ..Self::default() })
    }

    /// Config whose largest affordable move is `d`; `d = 0` forbids movement.
    pub fn from_max_distance(d: f64) -> Result<Self> {
        if !(d >= 0.0) || !d.is_finite() {
            return invalid(format!("max distance d = {d} must be a nonnegative real"));
        }
        let beta = if d == 0.0 { f64::INFINITY } else { BUDGET / d };
        Ok(Self { beta, ..Self::default() })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn budget(&self) -> f64 {
        BUDGET
    }

    pub fn max_distance(&self) -> f64 {
        BUDGET / self.beta
    }

    /// Cost of a move of Euclidean length `dist`.
    pub fn cost(&self, dist: f64) -> f64 {
        if dist == 0.0 {
            0.0
        } else {
            self.beta * dist
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return invalid(format!("cost scale beta = {} must be positive", self.beta));
        }
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return invalid(format!("tolerance {} must be a nonnegative real", self.tol));
        }
        Ok(())
    }
}

pub(crate) mod serde_beta {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(beta: &f64, s: S) -> Result<S::Ok, S::Error> {
        if beta.is_finite() {
            s.serialize_some(beta)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn check_inputs(clf: &LinearGraphClassifier, x: &NodeFeatures, w: &EmbeddingWeights, i: usize) -> Result<f64> {
    clf.check_dim(x.dim())?;
    if x.n() != w.n() {
        return invalid(format!("{} feature rows but weights over {} nodes", x.n(), w.n()));
    }
    if i >= x.n() {
        return invalid(format!("node {i} out of range"));
    }
    let q = clf.check_nondegenerate()?;
    if !(w.self_weight(i) > 0.0) {
        return Err(Error::NodeImmobile(i));
    }
    Ok(q)
}

fn node_score(clf: &LinearGraphClassifier, x: &NodeFeatures, w: &EmbeddingWeights, i: usize) -> f64 {
    w.incoming(i)
        .iter()
        .map(|&(j, wji)| wji * dot(&clf.theta, x.row(j)))
        .sum::<f64>()
        + clf.bias
}

fn shifted(x: &[f64], theta: &[f64], step: f64) -> Vec<f64> {
    x.iter().zip(theta).map(|(a, t)| a - step * t).collect()
}

/// Cheapest features for node `i` whose embedding scores exactly `tol`,
/// holding every other node fixed.
pub fn project_to_boundary(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    i: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let q = check_inputs(clf, x, w, i)?;
    let s = node_score(clf, x, w, i);
    let step = (s - tol) / (q * w.self_weight(i));
    Ok(shifted(x.row(i), &clf.theta, step))
}

/// Projects only nodes scoring strictly below zero; others are returned as is.
pub fn project_positive_only(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    i: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    check_inputs(clf, x, w, i)?;
    if node_score(clf, x, w, i) < 0.0 {
        project_to_boundary(clf, x, w, i, tol)
    } else {
        Ok(x.row(i).to_vec())
    }
}

/// Boundary projection under the quadratic cost `(x' - x)^T A (x' - x) / 2`.
pub fn project_generalized(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    i: usize,
    a: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    check_inputs(clf, x, w, i)?;
    let dim = clf.dim();
    if a.nrows() != dim || a.ncols() != dim {
        return invalid(format!("cost matrix must be {dim}x{dim}"));
    }
    let sym = a.transpose() + a;
    let chol = sym
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("cost matrix is not positive definite".into()))?;
    let theta = nalgebra::DVector::from_column_slice(&clf.theta);
    let dir = chol.solve(&theta);
    let curvature = theta.dot(&dir);
    let s = node_score(clf, x, w, i);
    let step = s / (curvature * w.self_weight(i));
    Ok(x.row(i).iter().zip(dir.iter()).map(|(xi, d)| xi - step * d).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub features: NodeFeatures,
    pub moved: Vec<bool>,
    pub kappa: Vec<f64>,
}

/// One synchronous round of best responses.
///
/// Feasibility is judged on the distance to the boundary itself; the landing
/// point then adds the `tol` margin and the incurred cost includes it.
/// Nodes with zero self-weight never move.
pub fn best_response_round(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    cfg: &ResponseConfig,
    kappa: &[f64],
) -> Result<RoundOutcome> {
    cfg.validate()?;
    if kappa.len() != x.n() {
        return invalid("cost vector length differs from node count");
    }
    let s = scores(clf, x, w)?;
    let q = clf.check_nondegenerate()?;
    let norm = q.sqrt();

    let mut features = x.clone();
    let mut moved = vec![false; x.n()];
    let mut kappa = kappa.to_vec();
    for i in 0..x.n() {
        let wii = w.self_weight(i);
        if s[i] >= 0.0 || wii <= 0.0 {
            continue;
        }
        let required = cfg.cost(-s[i] / (norm * wii));
        if required + kappa[i] > BUDGET + BUDGET_SLACK {
            continue;
        }
        let step = (s[i] - cfg.tol) / (q * wii);
        let target = shifted(x.row(i), &clf.theta, step);
        let dist = x
            .row(i)
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        kappa[i] += cfg.cost(dist);
        features.row_mut(i).copy_from_slice(&target);
        moved[i] = true;
    }
    Ok(RoundOutcome { features, moved, kappa })
}

/// Complete record of a best-response simulation.
///
/// Each node moves at most once, so feature snapshots are stored as the
/// initial matrix plus one landing point per mover.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    rounds: usize,
    initial: NodeFeatures,
    moved_round: Vec<Option<usize>>,
    moved_to: Vec<Option<Vec<f64>>>,
    cost: Vec<f64>,
    scores_by_round: Vec<Vec<f64>>,
    predictions_by_round: Vec<Labels>,
}

impl DynamicsTrace {
    /// Number of rounds in which at least one node moved.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn n(&self) -> usize {
        self.initial.n()
    }

    pub fn moved_round(&self, i: usize) -> Option<usize> {
        self.moved_round[i]
    }

    pub fn moved_rounds(&self) -> &[Option<usize>] {
        &self.moved_round
    }

    /// Cumulative cost per node at convergence.
    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// Index 0 holds the initial state.
    pub fn predictions_by_round(&self) -> &[Labels] {
        &self.predictions_by_round
    }

    pub fn scores_by_round(&self) -> &[Vec<f64>] {
        &self.scores_by_round
    }

    pub fn initial_predictions(&self) -> &Labels {
        &self.predictions_by_round[0]
    }

    pub fn final_predictions(&self) -> &Labels {
        self.predictions_by_round.last().expect("trace holds the initial state")
    }

    pub fn final_scores(&self) -> &[f64] {
        self.scores_by_round.last().expect("trace holds the initial state")
    }

    /// Features after `round` rounds (clamped to convergence).
    pub fn features_at(&self, round: usize) -> NodeFeatures {
        let mut x = self.initial.clone();
        for (i, (r, to)) in self.moved_round.iter().zip(&self.moved_to).enumerate() {
            if let (Some(r), Some(to)) = (r, to) {
                if *r <= round {
                    x.row_mut(i).copy_from_slice(to);
                }
            }
        }
        x
    }

    pub fn features_by_round(&self) -> Vec<NodeFeatures> {
        (0..=self.rounds).map(|t| self.features_at(t)).collect()
    }

    pub fn final_features(&self) -> NodeFeatures {
        self.features_at(self.rounds)
    }

    /// Movers per round; entry `t - 1` counts the nodes that moved in round `t`.
    pub fn moves_per_round(&self) -> Vec<usize> {
        let mut counts = vec![0; self.rounds];
        for r in self.moved_round.iter().flatten() {
            counts[r - 1] += 1;
        }
        counts
    }

    pub fn movers(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.moved_round[i].is_some()).collect()
    }

    /// Nodes whose prediction went from -1 to +1 without ever moving.
    pub fn hitchhikers(&self) -> Vec<usize> {
        let first = self.initial_predictions();
        let last = self.final_predictions();
        (0..self.n())
            .filter(|&i| first.get(i) == -1 && last.get(i) == 1 && self.moved_round[i].is_none())
            .collect()
    }

    /// JSON export; `names` (when given) label nodes in the `moved_round` map.
    pub fn to_export(&self, names: Option<&[String]>) -> TraceExport {
        let label = |i: usize| names.and_then(|n| n.get(i).cloned()).unwrap_or_else(|| i.to_string());
        TraceExport {
            format_version: TRACE_FORMAT_VERSION,
            rounds: self.rounds,
            moved_round: self
                .moved_round
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.map(|r| (label(i), r)))
                .collect(),
            move_round_by_node: self.moved_round.clone(),
            moves_per_round: self.moves_per_round(),
            cost: self.cost.clone(),
            predictions_by_round: self
                .predictions_by_round
                .iter()
                .map(|l| l.as_slice().to_vec())
                .collect(),
            hitchhikers: self.hitchhikers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceExport {
    pub format_version: u32,
    pub rounds: usize,
    pub moved_round: BTreeMap<String, usize>,
    pub move_round_by_node: Vec<Option<usize>>,
    pub moves_per_round: Vec<usize>,
    pub cost: Vec<f64>,
    pub predictions_by_round: Vec<Vec<i8>>,
    pub hitchhikers: Vec<usize>,
}

/// Runs best-response rounds until one passes with no movement.
pub fn simulate_dynamics(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    cfg: &ResponseConfig,
) -> Result<DynamicsTrace> {
    cfg.validate()?;
    let n = x.n();
    let max_rounds = cfg.max_rounds.unwrap_or(n + 1);
    let initial_scores = scores(clf, x, w)?;

    let mut trace = DynamicsTrace {
        rounds: 0,
        initial: x.clone(),
        moved_round: vec![None; n],
        moved_to: vec![None; n],
        cost: vec![0.0; n],
        predictions_by_round: vec![to_labels(&initial_scores)],
        scores_by_round: vec![initial_scores],
    };
    let mut current = x.clone();
    loop {
        let out = best_response_round(clf, &current, w, cfg, &trace.cost)?;
        if !out.moved.iter().any(|&m| m) {
            break;
        }
        trace.rounds += 1;
        if trace.rounds > max_rounds {
            return Err(Error::InternalInvariant(format!(
                "dynamics did not converge within {max_rounds} rounds"
            )));
        }
        for i in (0..n).filter(|&i| out.moved[i]) {
            if let Some(prev) = trace.moved_round[i] {
                return Err(Error::InternalInvariant(format!(
                    "node {i} moved in rounds {prev} and {}",
                    trace.rounds
                )));
            }
            trace.moved_round[i] = Some(trace.rounds);
            trace.moved_to[i] = Some(out.features.row(i).to_vec());
        }
        current = out.features;
        trace.cost = out.kappa;
        let s = scores(clf, &current, w)?;
        trace.predictions_by_round.push(to_labels(&s));
        trace.scores_by_round.push(s);
    }
    Ok(trace)
}

fn to_labels(scores: &[f64]) -> Labels {
    Labels::new(scores.iter().map(|&s| sign(s)).collect()).expect("signs are binary")
}

/// Nodes whose prediction flipped from -1 to +1 without moving.
pub fn hitchhikers(trace: &DynamicsTrace) -> Vec<usize> {
    trace.hitchhikers()
}
