//! Training through the smoothed response stack, and threshold line search.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::GraphView;
use crate::error::{invalid, Error, Result};
use crate::exact::{simulate_dynamics, ResponseConfig};
use crate::graph::{scores, sign, EmbeddingWeights, Labels, LinearGraphClassifier, NodeFeatures};
use crate::smooth::{backward, stacked_forward, SmoothConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Mean of `log(1 + exp(-y s))` and its gradient with respect to each score.
pub fn logistic_loss(scores: &[f64], y: &[i8]) -> Result<(f64, Vec<f64>)> {
    if scores.len() != y.len() {
        return invalid(format!("{} scores for {} labels", scores.len(), y.len()));
    }
    if scores.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = scores.len() as f64;
    let mut loss = 0.0;
    let grad = scores
        .iter()
        .zip(y)
        .map(|(&s, &yi)| {
            let m = f64::from(yi) * s;
            // log(1 + e^-m) without overflow
            loss += if m > 0.0 { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
            -f64::from(yi) * crate::smooth::sigmoid(-m) / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, size: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; size], v: vec![0.0; size], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grads[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grads[k] * grads[k];
            params[k] -= self.lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Penalty on `|theta|^2`; the bias is not penalized.
    pub weight_decay: f64,
    pub epochs: usize,
    /// Smoothed response layers; 0 trains the naive model.
    pub layers: usize,
    pub tau: f64,
    #[serde(with = "crate::exact::serde_beta")]
    pub beta: f64,
    pub tol: f64,
    /// Standard deviation of the initial `theta`.
    pub init_scale: f64,
    /// Epochs of plain logistic regression run before training through
    /// the response layers; unused when `layers = 0`.
    #[serde(default)]
    pub pretrain_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            weight_decay: 1.3e-5,
            epochs: 20,
            layers: 3,
            tau: 0.05,
            beta: 1.0,
            tol: 1e-6,
            init_scale: 0.1,
            pretrain_epochs: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn smooth(&self) -> SmoothConfig {
        SmoothConfig { tau: self.tau, layers: self.layers, tol: self.tol, beta: self.beta, freeze_immobile: true }
    }

    pub fn response(&self) -> ResponseConfig {
        ResponseConfig { beta: self.beta, tol: self.tol, max_rounds: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return invalid(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.epochs < 1 {
            return invalid("training needs at least one epoch");
        }
        if !(self.weight_decay >= 0.0) || !(self.init_scale > 0.0) {
            return invalid("weight decay must be nonnegative and init scale positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub classifier: LinearGraphClassifier,
    /// Objective before each epoch's update.
    pub loss_curve: Vec<f64>,
    pub config: TrainConfig,
}

impl TrainedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format version {}", m.format_version)));
        }
        Ok(m)
    }
}

/// Regularized objective and its gradient on the view's eval nodes.
pub fn objective(
    clf: &LinearGraphClassifier,
    view: &GraphView,
    smooth: &SmoothConfig,
    weight_decay: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    let rec = stacked_forward(clf, &view.features, &view.weights, smooth)?;
    let s: Vec<f64> = view.eval.iter().map(|&i| rec.scores()[i]).collect();
    let (loss, g_eval) = logistic_loss(&s, &view.eval_labels())?;
    let mut g = vec![0.0; view.weights.n()];
    for (&i, gi) in view.eval.iter().zip(g_eval) {
        g[i] = gi;
    }
    let (mut g_theta, g_bias) = backward(clf, &rec, &g)?;
    for (gt, t) in g_theta.iter_mut().zip(&clf.theta) {
        *gt += 2.0 * weight_decay * t;
    }
    Ok((loss + weight_decay * clf.norm_sq(), g_theta, g_bias))
}

fn run_adam(
    view: &GraphView,
    params: &mut [f64],
    smooth: &SmoothConfig,
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<Vec<f64>> {
    let dim = params.len() - 1;
    let mut adam = Adam::new(cfg.learning_rate, dim + 1);
    let mut curve = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let clf = LinearGraphClassifier::new(params[..dim].to_vec(), params[dim]);
        let (loss, mut grad, g_bias) = objective(&clf, view, smooth, cfg.weight_decay)?;
        grad.push(g_bias);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingFailure(format!("non-finite loss or gradient at epoch {epoch}")));
        }
        curve.push(loss);
        adam.step(params, &grad);
    }
    Ok(curve)
}

/// Full-batch Adam on `theta` and `bias`, one step per epoch.
///
/// With response layers, training starts from the classifier reached after
/// `pretrain_epochs` steps without them; the Adam state is reset in between.
pub fn train(view: &GraphView, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if view.eval.is_empty() {
        return invalid("training view has no labelled nodes");
    }
    let dim = view.features.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.init_scale).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut params: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
    params.push(0.0);

    let smooth = cfg.smooth();
    if cfg.layers > 0 && cfg.pretrain_epochs > 0 {
        let plain = SmoothConfig { layers: 0, ..smooth.clone() };
        run_adam(view, &mut params, &plain, cfg, cfg.pretrain_epochs)?;
    }
    let curve = run_adam(view, &mut params, &smooth, cfg, cfg.epochs)?;
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::TrainingFailure("parameters diverged".into()));
    }
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        classifier: LinearGraphClassifier::new(params[..dim].to_vec(), params[dim]),
        loss_curve: curve,
        config: cfg.clone(),
    })
}

/// Fraction of `eval` nodes whose prediction matches the label.
pub fn accuracy_on(pred: &Labels, y: &Labels, eval: &[usize]) -> f64 {
    if eval.is_empty() {
        return 0.0;
    }
    eval.iter().filter(|&&i| pred.get(i) == y.get(i)).count() as f64 / eval.len() as f64
}

/// Accuracy of `clf` on `eval`, after the exact dynamics when `response` is set.
pub fn accuracy(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    y: &Labels,
    eval: &[usize],
    response: Option<&ResponseConfig>,
) -> Result<f64> {
    let pred = match response {
        Some(cfg) => simulate_dynamics(clf, x, w, cfg)?.final_predictions().clone(),
        None => Labels::new(scores(clf, x, w)?.into_iter().map(sign).collect())?,
    };
    Ok(accuracy_on(&pred, y, eval))
}

/// Evenly spaced grid including both ends.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Default threshold grid: `[-3, 3]` in steps of 0.01.
pub fn default_threshold_grid() -> Vec<f64> {
    linspace(-3.0, 3.0, 601)
}

/// Scans the rules `phi >= b` over `grid` for one-dimensional features.
/// Returns the best threshold (smallest on ties) and `(b, accuracy)` pairs.
pub fn line_search_threshold(
    x: &NodeFeatures,
    w: &EmbeddingWeights,
    y: &Labels,
    eval: &[usize],
    response: Option<&ResponseConfig>,
    grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    if x.dim() != 1 {
        return invalid(format!("line search needs one-dimensional features, got {}", x.dim()));
    }
    if grid.is_empty() {
        return invalid("empty threshold grid");
    }
    let curve: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&b| Ok((b, accuracy(&LinearGraphClassifier::threshold(b), x, w, y, eval, response)?)))
        .collect::<Result<_>>()?;
    let mut best = curve[0];
    for &(b, acc) in &curve[1..] {
        if acc > best.1 || (acc == best.1 && b < best.0) {
            best = (b, acc);
        }
    }
    Ok((best.0, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::generate_synthetic;

    #[test]
    fn logistic_loss_basics() {
        let (l, g) = logistic_loss(&[0.0, 0.0], &[1, -1]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!((g[0] + 0.25).abs() < 1e-15 && (g[1] - 0.25).abs() < 1e-15);
        let (l, g) = logistic_loss(&[50.0, -800.0], &[1, -1]).unwrap();
        assert!(l < 1e-20 && g.iter().all(|v| v.abs() < 1e-20));
        let (l, _) = logistic_loss(&[-800.0], &[1]).unwrap();
        assert!((l - 800.0).abs() < 1e-9);
        assert!(logistic_loss(&[0.0], &[1, 1]).is_err());
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = vec![1.0, -1.0];
        Adam::new(0.2, 2).step(&mut p, &[3.0, -0.01]);
        assert!((p[0] - 0.8).abs() < 1e-6 && (p[1] + 0.8).abs() < 1e-5);
    }

    #[test]
    fn naive_training_separates() {
        let x = NodeFeatures::scalar(&[2.0, 1.5, 3.0, -1.0, -2.5, -0.5]).unwrap();
        let y = Labels::new(vec![1, 1, 1, -1, -1, -1]).unwrap();
        let view = GraphView {
            nodes: (0..6).collect(),
            features: x.clone(),
            labels: y.clone(),
            weights: EmbeddingWeights::identity(6),
            eval: (0..6).collect(),
        };
        let cfg = TrainConfig { layers: 0, ..TrainConfig::default() };
        let m = train(&view, &cfg).unwrap();
        assert_eq!(m.loss_curve.len(), 20);
        assert!(m.loss_curve[19] < m.loss_curve[0]);
        let acc = accuracy(&m.classifier, &x, &view.weights, &y, &view.eval, None).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(train(&view, &cfg).unwrap(), m);
    }

    #[test]
    fn train_rejects_bad_config() {
        let b = generate_synthetic(16, 0.5, 0).unwrap();
        let v = b.train_view().unwrap();
        assert!(train(&v, &TrainConfig { epochs: 0, ..TrainConfig::default() }).is_err());
        assert!(train(&v, &TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }).is_err());
    }

    #[test]
    fn line_search_single_point_and_dims() {
        let x = NodeFeatures::scalar(&[1.0, -1.0]).unwrap();
        let y = Labels::new(vec![1, -1]).unwrap();
        let w = EmbeddingWeights::identity(2);
        let (b, curve) = line_search_threshold(&x, &w, &y, &[0, 1], None, &[0.25]).unwrap();
        assert_eq!(b, 0.25);
        assert_eq!(curve, vec![(0.25, 1.0)]);
        let x2 = NodeFeatures::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(line_search_threshold(&x2, &w, &y, &[0, 1], None, &[0.0]).is_err());
    }

    #[test]
    fn linspace_hits_zero() {
        let g = default_threshold_grid();
        assert_eq!(g.len(), 601);
        assert_eq!(g[300], 0.0);
        assert_eq!(g[600], 3.0);
    }

    #[test]
    fn model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            classifier: LinearGraphClassifier::new(vec![0.1, -2.5], 0.3),
            loss_curve: vec![0.7, 0.5],
            config: TrainConfig { beta: f64::INFINITY, ..TrainConfig::default() },
        };
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(TrainedModel::load(&p).unwrap(), m);
    }
}
