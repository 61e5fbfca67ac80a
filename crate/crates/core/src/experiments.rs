//! Metrics and experiment orchestration for the three arms.
//!
//! * benchmark: learned without responses, evaluated without responses;
//! * naive: the same classifier, evaluated after the exact dynamics;
//! * robust: learned through the smoothed responses, evaluated after the exact dynamics.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{generate_synthetic, load_bundle, make_inductive_split, DatasetBundle, GraphView};
use crate::error::{invalid, Result};
use crate::exact::{simulate_dynamics, DynamicsTrace, ResponseConfig};
use crate::graph::{predict, Labels, LinearGraphClassifier};
use crate::train::{accuracy_on, line_search_threshold, linspace, train, TrainConfig};

/// Movement statistics over a set of evaluated nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MovementMetrics {
    pub moved_fraction: f64,
    /// Prediction went from -1 to +1 by convergence, by moving or not.
    pub crossed_fraction: f64,
    pub moved_fraction_pos: f64,
    pub moved_fraction_neg: f64,
    pub crossed_fraction_pos: f64,
    pub crossed_fraction_neg: f64,
    /// Accuracy gained from crossing positives; strategic minus static
    /// accuracy equals `gain_from_positive - harm_from_negative`.
    pub gain_from_positive: f64,
    pub harm_from_negative: f64,
    /// Entry `t - 1` counts evaluated nodes moving in round `t`.
    pub moves_per_round: Vec<usize>,
    pub rounds: usize,
}

fn frac(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

pub fn movement_metrics(trace: &DynamicsTrace, y: &Labels, eval: &[usize]) -> MovementMetrics {
    let first = trace.initial_predictions();
    let last = trace.final_predictions();
    let mut moved = [0usize; 2];
    let mut crossed = [0usize; 2];
    let mut class_size = [0usize; 2];
    let mut per_round = vec![0; trace.rounds()];
    for &i in eval {
        let c = usize::from(y.get(i) == 1);
        class_size[c] += 1;
        if let Some(r) = trace.moved_round(i) {
            moved[c] += 1;
            per_round[r - 1] += 1;
        }
        if first.get(i) == -1 && last.get(i) == 1 {
            crossed[c] += 1;
        }
    }
    let total = eval.len();
    MovementMetrics {
        moved_fraction: frac(moved[0] + moved[1], total),
        crossed_fraction: frac(crossed[0] + crossed[1], total),
        moved_fraction_pos: frac(moved[1], class_size[1]),
        moved_fraction_neg: frac(moved[0], class_size[0]),
        crossed_fraction_pos: frac(crossed[1], class_size[1]),
        crossed_fraction_neg: frac(crossed[0], class_size[0]),
        gain_from_positive: frac(crossed[1], total),
        harm_from_negative: frac(crossed[0], total),
        moves_per_round: per_round,
        rounds: trace.rounds(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub strategic: bool,
    /// All zero for non-strategic evaluation.
    pub movement: MovementMetrics,
}

/// Accuracy on the view's eval nodes, after the exact dynamics if `strategic`.
pub fn evaluate(
    clf: &LinearGraphClassifier,
    view: &GraphView,
    response: &ResponseConfig,
    strategic: bool,
) -> Result<MetricsRow> {
    if strategic {
        let trace = simulate_dynamics(clf, &view.features, &view.weights, response)?;
        Ok(MetricsRow {
            accuracy: accuracy_on(trace.final_predictions(), &view.labels, &view.eval),
            strategic,
            movement: movement_metrics(&trace, &view.labels, &view.eval),
        })
    } else {
        let pred = predict(clf, &view.features, &view.weights)?;
        Ok(MetricsRow {
            accuracy: accuracy_on(&pred, &view.labels, &view.eval),
            strategic,
            movement: MovementMetrics::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Benchmark,
    Naive,
    Robust,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Benchmark, Arm::Naive, Arm::Robust];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Benchmark => "benchmark",
            Arm::Naive => "naive",
            Arm::Robust => "robust",
        }
    }
}

/// How the benchmark and naive arms learn their classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// Adam on the logistic loss with no response layers.
    #[default]
    Gradient,
    /// Best threshold on one-dimensional features, without responses.
    LineSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// `n` nodes per split; `alpha` is overridden on an alpha sweep.
    Synthetic { n: usize, alpha: f64 },
    Bundle {
        path: PathBuf,
        /// Applies the inductive split with this hop count.
        #[serde(default)]
        inductive_k: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    MaxDistance,
    Layers,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::MaxDistance => "max_distance",
            SweepAxis::Layers => "layers",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self { start: -3.0, end: 3.0, count: 601 }
    }
}

fn default_arms() -> Vec<Arm> {
    Arm::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Also fixes the response model (`beta`, `tol`) used for evaluation.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub learner: Learner,
    #[serde(default)]
    pub threshold_grid: ThresholdGrid,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.arms.is_empty() || self.values.is_empty() || self.seeds.is_empty() {
            return invalid("experiment needs at least one arm, sweep value and seed");
        }
        for &v in &self.values {
            let ok = match self.axis {
                SweepAxis::Alpha => (0.0..=1.0).contains(&v),
                SweepAxis::MaxDistance => v >= 0.0 && v.is_finite(),
                SweepAxis::Layers => v >= 0.0 && v.fract() == 0.0,
            };
            if !ok {
                return invalid(format!("invalid {} value {v}", self.axis.name()));
            }
        }
        if self.axis == SweepAxis::Alpha && !matches!(self.dataset, DatasetSpec::Synthetic { .. }) {
            return invalid("alpha sweeps need a synthetic dataset");
        }
        Ok(())
    }
}

/// Metrics of one arm at one sweep value and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub value: f64,
    pub seed: u64,
    pub arm: Arm,
    pub classifier: LinearGraphClassifier,
    pub metrics: MetricsRow,
}

/// Trains and evaluates the requested arms on one train/test pair.
pub fn run_arms(
    train_view: &GraphView,
    test_view: &GraphView,
    arms: &[Arm],
    train_cfg: &TrainConfig,
    learner: Learner,
    grid: &ThresholdGrid,
) -> Result<Vec<(Arm, LinearGraphClassifier, MetricsRow)>> {
    let response = train_cfg.response();
    let needs_static = arms.iter().any(|&a| a != Arm::Robust);
    let static_clf = if needs_static {
        Some(match learner {
            Learner::Gradient => train(train_view, &TrainConfig { layers: 0, ..train_cfg.clone() })?.classifier,
            Learner::LineSearch => {
                let g = linspace(grid.start, grid.end, grid.count);
                let (b, _) = line_search_threshold(
                    &train_view.features,
                    &train_view.weights,
                    &train_view.labels,
                    &train_view.eval,
                    None,
                    &g,
                )?;
                LinearGraphClassifier::threshold(b)
            }
        })
    } else {
        None
    };
    arms.iter()
        .map(|&arm| {
            let (clf, strategic) = match arm {
                Arm::Benchmark => (static_clf.clone().expect("trained"), false),
                Arm::Naive => (static_clf.clone().expect("trained"), true),
                Arm::Robust => (train(train_view, train_cfg)?.classifier, true),
            };
            let m = evaluate(&clf, test_view, &response, strategic)?;
            Ok((arm, clf, m))
        })
        .collect()
}

fn load_base(spec: &DatasetSpec) -> Result<Option<DatasetBundle>> {
    match spec {
        DatasetSpec::Synthetic { .. } => Ok(None),
        DatasetSpec::Bundle { path, inductive_k } => {
            let b = load_bundle(path)?;
            Ok(Some(match inductive_k {
                Some(k) => make_inductive_split(&b, *k)?.0,
                None => b,
            }))
        }
    }
}

/// Runs every (value, seed) point, in parallel, and returns records ordered
/// by value, then seed, then arm order in the config.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let base = load_base(&cfg.dataset)?;
    let points: Vec<(f64, u64)> = cfg
        .values
        .iter()
        .flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let per_point: Vec<Vec<RunRecord>> = points
        .par_iter()
        .map(|&(value, seed)| {
            let mut tc = TrainConfig { seed, ..cfg.train.clone() };
            let bundle = match (&cfg.dataset, &base) {
                (DatasetSpec::Synthetic { n, alpha }, _) => {
                    let a = if cfg.axis == SweepAxis::Alpha { value } else { *alpha };
                    generate_synthetic(*n, a, seed)?
                }
                (_, Some(b)) => b.clone(),
                _ => unreachable!("bundle datasets are loaded up front"),
            };
            match cfg.axis {
                SweepAxis::MaxDistance => tc.beta = ResponseConfig::from_max_distance(value)?.beta,
                SweepAxis::Layers => tc.layers = value as usize,
                SweepAxis::Alpha => {}
            }
            let rows = run_arms(
                &bundle.train_view()?,
                &bundle.test_view()?,
                &cfg.arms,
                &tc,
                cfg.learner,
                &cfg.threshold_grid,
            )?;
            Ok(rows
                .into_iter()
                .map(|(arm, classifier, metrics)| RunRecord { value, seed, arm, classifier, metrics })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

const ARM_COLUMNS: [&str; 8] =
    ["accuracy", "moved", "crossed", "moved_pos", "moved_neg", "crossed_pos", "crossed_neg", "rounds"];

/// One row per (value, seed) with a column group per arm.
pub fn sweep_csv(axis: SweepAxis, arms: &[Arm], records: &[RunRecord]) -> String {
    let mut out = String::from("axis,value,seed");
    for arm in arms {
        for c in ARM_COLUMNS {
            write!(out, ",{}_{c}", arm.name()).expect("string write");
        }
    }
    out.push('\n');
    for chunk in records.chunks(arms.len()) {
        write!(out, "{},{},{}", axis.name(), chunk[0].value, chunk[0].seed).expect("string write");
        for r in chunk {
            let m = &r.metrics.movement;
            write!(
                out,
                ",{},{},{},{},{},{},{},{}",
                r.metrics.accuracy,
                m.moved_fraction,
                m.crossed_fraction,
                m.moved_fraction_pos,
                m.moved_fraction_neg,
                m.crossed_fraction_pos,
                m.crossed_fraction_neg,
                m.rounds
            )
            .expect("string write");
        }
        out.push('\n');
    }
    out
}

/// Mean and standard error of the mean (zero for a single sample).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub value: f64,
    pub arm: Arm,
    pub seeds: usize,
    pub accuracy: (f64, f64),
    pub moved: (f64, f64),
    pub crossed: (f64, f64),
}

/// Mean and standard error across seeds per (value, arm), in record order.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(f64, Arm)> = Vec::new();
    for r in records {
        if !keys.iter().any(|&(v, a)| v == r.value && a == r.arm) {
            keys.push((r.value, r.arm));
        }
    }
    keys.into_iter()
        .map(|(value, arm)| {
            let sel: Vec<&RunRecord> = records.iter().filter(|r| r.value == value && r.arm == arm).collect();
            let col = |f: &dyn Fn(&RunRecord) -> f64| mean_se(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
            AggregateRow {
                value,
                arm,
                seeds: sel.len(),
                accuracy: col(&|r| r.metrics.accuracy),
                moved: col(&|r| r.metrics.movement.moved_fraction),
                crossed: col(&|r| r.metrics.movement.crossed_fraction),
            }
        })
        .collect()
}

pub fn aggregate_csv(axis: SweepAxis, rows: &[AggregateRow]) -> String {
    let mut out =
        String::from("axis,value,arm,seeds,accuracy_mean,accuracy_se,moved_mean,moved_se,crossed_mean,crossed_se\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            axis.name(),
            r.value,
            r.arm.name(),
            r.seeds,
            r.accuracy.0,
            r.accuracy.1,
            r.moved.0,
            r.moved.1,
            r.crossed.0,
            r.crossed.1
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityOrdering {
    /// Highest out-degree first; ties by node id.
    OutDegree,
    /// Seeded uniform permutation.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub q: f64,
    pub disconnected: usize,
    pub arm: Arm,
    pub metrics: MetricsRow,
}

/// Nodes whose out-edges are cut at percentile `q`.
pub fn centrality_cut(bundle: &DatasetBundle, q: f64, ordering: CentralityOrdering, seed: u64) -> Vec<usize> {
    let n = bundle.n();
    let mut order: Vec<usize> = (0..n).collect();
    match ordering {
        CentralityOrdering::OutDegree => {
            let deg = bundle.graph.out_degrees();
            order.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
        }
        CentralityOrdering::Random => order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    let count = ((q / 100.0) * n as f64).round() as usize;
    order.truncate(count.min(n));
    order
}

/// For each percentile, removes the out-edges of the top nodes, rebuilds
/// the weights, retrains and evaluates every arm.
pub fn centrality_ablation(
    bundle: &DatasetBundle,
    q_values: &[f64],
    ordering: CentralityOrdering,
    train_cfg: &TrainConfig,
    learner: Learner,
    grid: &ThresholdGrid,
) -> Result<Vec<AblationRow>> {
    if let Some(q) = q_values.iter().find(|q| !(0.0..=100.0).contains(*q)) {
        return invalid(format!("percentile {q} outside [0, 100]"));
    }
    let per_q: Vec<Vec<AblationRow>> = q_values
        .par_iter()
        .map(|&q| {
            let cut = centrality_cut(bundle, q, ordering, train_cfg.seed);
            let mut b = bundle.clone();
            b.graph = bundle.graph.without_out_edges(&cut);
            let rows = run_arms(&b.train_view()?, &b.test_view()?, &Arm::ALL, train_cfg, learner, grid)?;
            Ok(rows
                .into_iter()
                .map(|(arm, _, metrics)| AblationRow { q, disconnected: cut.len(), arm, metrics })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_q.into_iter().flatten().collect())
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("q,disconnected,arm,accuracy,moved,crossed\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.q,
            r.disconnected,
            r.arm.name(),
            r.metrics.accuracy,
            r.metrics.movement.moved_fraction,
            r.metrics.movement.crossed_fraction
        )
        .expect("string write");
    }
    out
}
