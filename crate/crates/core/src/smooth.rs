//! Differentiable approximation of the response dynamics.
//!
//! One layer replaces the hard "move if affordable" rule with a sigmoid gate
//! on the remaining budget. Stacking `T` layers approximates `T` rounds.
//! For 2-norm costs, the cost already paid by a node equals the distance from
//! its original features, so every layer prices moves against `x0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::BUDGET;
use crate::graph::{dot, EmbeddingWeights, LinearGraphClassifier, NodeFeatures};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothConfig {
    /// Sigmoid temperature.
    pub tau: f64,
    /// Number of stacked response layers.
    pub layers: usize,
    pub tol: f64,
    #[serde(with = "crate::exact::serde_beta")]
    pub beta: f64,
    /// Treat nodes with zero self-weight as non-responsive instead of failing.
    #[serde(default)]
    pub freeze_immobile: bool,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self { tau: 0.05, layers: 3, tol: 1e-6, beta: 1.0, freeze_immobile: false }
    }
}

impl SmoothConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return invalid(format!("temperature tau = {} must be positive", self.tau));
        }
        if !(self.beta > 0.0) {
            return invalid(format!("cost scale beta = {} must be positive", self.beta));
        }
        if !(self.tol >= 0.0) {
            return invalid(format!("tolerance {} must be nonnegative", self.tol));
        }
        Ok(())
    }

    fn cost(&self, dist: f64) -> f64 {
        if dist == 0.0 {
            0.0
        } else {
            self.beta * dist
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerRecord {
    input: NodeFeatures,
    scores: Vec<f64>,
    /// Strict-negativity mask; inactive nodes pass through unchanged.
    active: Vec<bool>,
    /// Projection coefficient: the proposal is `x - coef * theta`.
    coef: Vec<f64>,
    /// `|x' - x0|` for active nodes.
    dist: Vec<f64>,
    gate_arg: Vec<f64>,
    gate: Vec<f64>,
}

/// Intermediate values of [`stacked_forward`], kept for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardRecord<'w> {
    classifier: LinearGraphClassifier,
    config: SmoothConfig,
    weights: &'w EmbeddingWeights,
    x0: NodeFeatures,
    layers: Vec<LayerRecord>,
    output: NodeFeatures,
    scores: Vec<f64>,
}

impl ForwardRecord<'_> {
    /// Smoothed features after the last layer.
    pub fn features(&self) -> &NodeFeatures {
        &self.output
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Input features of layer `t` (layer 0 sees the original features).
    pub fn layer_input(&self, t: usize) -> &NodeFeatures {
        &self.layers[t].input
    }

    /// Sigmoid arguments `(budget - cost) / tau` of layer `t`; zero for inactive nodes.
    pub fn gate_args(&self, t: usize) -> &[f64] {
        &self.layers[t].gate_arg
    }

    /// Gate values of layer `t`; zero for inactive nodes.
    pub fn gates(&self, t: usize) -> &[f64] {
        &self.layers[t].gate
    }

    /// Cost of each layer-`t` proposal measured from the original features.
    pub fn proposal_costs(&self, t: usize) -> Vec<f64> {
        self.layers[t].dist.iter().map(|&d| self.config.cost(d)).collect()
    }

    /// Cost of the smoothed features after `t` layers, measured from `x0`.
    pub fn accumulated_costs(&self, t: usize) -> Vec<f64> {
        let x = if t < self.layers.len() { &self.layers[t].input } else { &self.output };
        x.rows()
            .zip(self.x0.rows())
            .map(|(a, b)| {
                let d = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
                self.config.cost(d)
            })
            .collect()
    }
}

fn check_shapes(clf: &LinearGraphClassifier, x: &NodeFeatures, w: &EmbeddingWeights) -> Result<f64> {
    clf.check_dim(x.dim())?;
    if x.n() != w.n() {
        return invalid(format!("{} feature rows but weights over {} nodes", x.n(), w.n()));
    }
    clf.check_nondegenerate()
}

fn responsive(w: &EmbeddingWeights, cfg: &SmoothConfig) -> Result<Vec<bool>> {
    (0..w.n())
        .map(|i| {
            if w.self_weight(i) > 0.0 {
                Ok(true)
            } else if cfg.freeze_immobile {
                Ok(false)
            } else {
                Err(Error::NodeImmobile(i))
            }
        })
        .collect()
}

fn layer_forward(
    clf: &LinearGraphClassifier,
    q: f64,
    xt: &NodeFeatures,
    x0: &NodeFeatures,
    w: &EmbeddingWeights,
    cfg: &SmoothConfig,
    responsive: &[bool],
) -> (NodeFeatures, LayerRecord) {
    let n = xt.n();
    let proj: Vec<f64> = xt.rows().map(|r| dot(&clf.theta, r)).collect();
    let scores: Vec<f64> = w.propagate(&proj).into_iter().map(|s| s + clf.bias).collect();

    let mut out = xt.clone();
    let mut rec = LayerRecord {
        input: xt.clone(),
        active: vec![false; n],
        coef: vec![0.0; n],
        dist: vec![0.0; n],
        gate_arg: vec![0.0; n],
        gate: vec![0.0; n],
        scores,
    };
    for i in 0..n {
        if !responsive[i] || rec.scores[i] >= 0.0 {
            continue;
        }
        let coef = (rec.scores[i] - cfg.tol) / (q * w.self_weight(i));
        let dist = xt
            .row(i)
            .iter()
            .zip(x0.row(i))
            .zip(&clf.theta)
            .map(|((x, x0), t)| {
                let r = x - coef * t - x0;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        let z = (BUDGET - cfg.cost(dist)) / cfg.tau;
        let g = sigmoid(z);
        for (o, t) in out.row_mut(i).iter_mut().zip(&clf.theta) {
            *o -= g * coef * t;
        }
        rec.active[i] = true;
        rec.coef[i] = coef;
        rec.dist[i] = dist;
        rec.gate_arg[i] = z;
        rec.gate[i] = g;
    }
    (out, rec)
}

/// One smoothed response layer applied to `xt`, pricing moves from `x0`.
pub fn soft_response_layer(
    clf: &LinearGraphClassifier,
    xt: &NodeFeatures,
    x0: &NodeFeatures,
    w: &EmbeddingWeights,
    cfg: &SmoothConfig,
) -> Result<NodeFeatures> {
    cfg.validate()?;
    let q = check_shapes(clf, xt, w)?;
    if x0.n() != xt.n() || x0.dim() != xt.dim() {
        return invalid("original and current features differ in shape");
    }
    let mask = responsive(w, cfg)?;
    Ok(layer_forward(clf, q, xt, x0, w, cfg, &mask).0)
}

/// Applies `cfg.layers` smoothed response layers and scores the result.
/// With zero layers this is the plain embedding classifier.
pub fn stacked_forward<'w>(
    clf: &LinearGraphClassifier,
    x: &NodeFeatures,
    w: &'w EmbeddingWeights,
    cfg: &SmoothConfig,
) -> Result<ForwardRecord<'w>> {
    cfg.validate()?;
    clf.check_dim(x.dim())?;
    if x.n() != w.n() {
        return invalid(format!("{} feature rows but weights over {} nodes", x.n(), w.n()));
    }
    let mut layers = Vec::with_capacity(cfg.layers);
    let mut current = x.clone();
    if cfg.layers > 0 {
        let q = clf.check_nondegenerate()?;
        let mask = responsive(w, cfg)?;
        for _ in 0..cfg.layers {
            let (next, rec) = layer_forward(clf, q, &current, x, w, cfg, &mask);
            layers.push(rec);
            current = next;
        }
    }
    let proj: Vec<f64> = current.rows().map(|r| dot(&clf.theta, r)).collect();
    let scores = w.propagate(&proj).into_iter().map(|s| s + clf.bias).collect();
    Ok(ForwardRecord {
        classifier: clf.clone(),
        config: cfg.clone(),
        weights: w,
        x0: x.clone(),
        layers,
        output: current,
        scores,
    })
}

/// Gradients of a loss with respect to `theta` and `bias`, given its gradient
/// at the final scores.
///
/// The strict-negativity mask gates values but carries no gradient.
pub fn backward(
    clf: &LinearGraphClassifier,
    record: &ForwardRecord<'_>,
    grad_scores: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if *clf != record.classifier {
        return invalid("forward record was produced with a different classifier");
    }
    let w = record.weights;
    let n = w.n();
    if grad_scores.len() != n {
        return invalid(format!("{} score gradients for {n} nodes", grad_scores.len()));
    }
    let theta = &clf.theta;
    let dim = theta.len();
    let cfg = &record.config;

    let mut g_theta = vec![0.0; dim];
    let mut g_bias: f64 = grad_scores.iter().sum();

    // scores = W^T-propagated (theta . x_T) + bias
    let v = w.propagate_back(grad_scores);
    let mut dx = NodeFeatures::zeros(n, dim);
    for j in 0..n {
        axpy(&mut g_theta, v[j], record.output.row(j));
        axpy(dx.row_mut(j), v[j], theta);
    }

    if record.layers.is_empty() {
        return Ok((g_theta, g_bias));
    }
    let q = clf.norm_sq();
    let mut dd = vec![0.0; dim];
    for layer in record.layers.iter().rev() {
        let mut dx_in = dx.clone();
        let mut ds = vec![0.0; n];
        let mut dq = 0.0;
        for i in (0..n).filter(|&i| layer.active[i]) {
            let coef = layer.coef[i];
            let g = layer.gate[i];
            let dout = dx.row(i);
            // out = x + g * d,  d = -coef * theta
            for (k, slot) in dd.iter_mut().enumerate() {
                *slot = g * dout[k];
            }
            let dg = -coef * dot(theta, dout);
            let gp = g * (1.0 - g);
            if gp != 0.0 && layer.dist[i] > 0.0 {
                let dc = -dg * gp / cfg.tau;
                let scale = dc * cfg.beta / layer.dist[i];
                let x = layer.input.row(i);
                let x0 = record.x0.row(i);
                for k in 0..dim {
                    let dr = scale * (x[k] - coef * theta[k] - x0[k]);
                    dx_in.row_mut(i)[k] += dr;
                    dd[k] += dr;
                }
            }
            axpy(&mut g_theta, -coef, &dd);
            let dcoef = -dot(theta, &dd);
            let wii = w.self_weight(i);
            ds[i] = dcoef / (q * wii);
            dq -= dcoef * (layer.scores[i] - cfg.tol) / (q * q * wii);
        }
        axpy(&mut g_theta, 2.0 * dq, theta);
        g_bias += ds.iter().sum::<f64>();
        let u = w.propagate_back(&ds);
        for j in 0..n {
            if u[j] != 0.0 {
                axpy(&mut g_theta, u[j], layer.input.row(j));
                axpy(dx_in.row_mut(j), u[j], theta);
            }
        }
        dx = dx_in;
    }
    Ok((g_theta, g_bias))
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
