use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{Gradients, Matrix, ParameterStore};
use crate::error::{Error, Result};

/// Floor applied to probabilities inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            gamma: 5e-6,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("loss weight {name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn combined_loss(seg: f64, obj: f64, reg: f64, w: &LossWeights) -> f64 {
    w.alpha * seg + w.beta * obj + w.gamma * reg
}

fn huber(r: f64, delta: f64) -> (f64, f64) {
    if r.abs() <= delta {
        (0.5 * r * r, r)
    } else {
        (delta * (r.abs() - delta / 2.0), delta * r.signum())
    }
}

/// Mean elementwise Huber loss and its gradient w.r.t. `pred`.
pub fn huber_loss(pred: &Matrix, target: &Matrix, delta: f64) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "huber loss: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.data().len();
    if n == 0 {
        return Ok((0.0, Matrix::zeros(pred.rows(), pred.cols())));
    }
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut total = 0.0;
    for (k, (p, t)) in pred.data().iter().zip(target.data()).enumerate() {
        let (v, g) = huber(p - t, delta);
        total += v;
        grad.data_mut()[k] = g / n as f64;
    }
    Ok((total / n as f64, grad))
}

/// Wraps an angle difference into (−period/2, period/2].
fn wrap_residual(r: f64, period: f64) -> f64 {
    let half = period / 2.0;
    let w = r - period * ((r + half) / period).floor();
    // `w` is in [−half, half); move the lower end to the upper end.
    if w <= -half {
        w + period
    } else {
        w
    }
}

/// Residual wrapping used by the box loss: orientation columns are axial (period π).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxResidualWrap {
    /// Column holding a full-turn direction angle (period 2π), if any.
    pub direction: Option<usize>,
    /// Column holding the axial orientation angle (period π).
    pub orientation: usize,
}

impl Default for BoxResidualWrap {
    fn default() -> Self {
        Self {
            direction: None,
            orientation: 4,
        }
    }
}

/// Huber loss over the box rows selected by `mask`, averaged over selected rows × 5.
/// Angle residuals are wrapped before the Huber function; the wrap is piecewise identity, so its derivative is 1.
pub fn box_regression_loss(
    pred: &Matrix,
    target: &Matrix,
    mask: &[bool],
    wrap: BoxResidualWrap,
    delta: f64,
) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() || pred.cols() != 5 || mask.len() != pred.rows() {
        return Err(Error::Shape("box regression loss shapes".into()));
    }
    let selected = mask.iter().filter(|&&m| m).count();
    let mut grad = Matrix::zeros(pred.rows(), 5);
    if selected == 0 {
        return Ok((0.0, grad));
    }
    let denom = (selected * 5) as f64;
    let mut total = 0.0;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        for j in 0..5 {
            let mut r = pred.get(i, j) - target.get(i, j);
            if j == wrap.orientation {
                r = wrap_residual(r, PI);
            } else if Some(j) == wrap.direction {
                r = wrap_residual(r, 2.0 * PI);
            }
            let (v, g) = huber(r, delta);
            total += v;
            grad.set(i, j, g / denom);
        }
    }
    Ok((total / denom, grad))
}

/// Class-weighted cross-entropy over probabilities: mean over points of `−w_label · ln max(p_label, 1e-12)`.
/// Returns the loss and its gradient w.r.t. the probabilities.
pub fn weighted_cross_entropy(probs: &Matrix, labels: &[usize], class_weights: &[f64]) -> Result<(f64, Matrix)> {
    if labels.len() != probs.rows() || class_weights.len() != probs.cols() {
        return Err(Error::Shape(format!(
            "cross-entropy: {} labels, {} weights for {:?} probabilities",
            labels.len(),
            class_weights.len(),
            probs.shape()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= probs.cols()) {
        return Err(Error::Target(format!("label {l} outside [0, {})", probs.cols())));
    }
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let n = labels.len();
    if n == 0 {
        return Ok((0.0, grad));
    }
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let p = probs.get(i, l);
        let w = class_weights[l];
        total -= w * p.max(PROB_FLOOR).ln();
        if p > PROB_FLOOR {
            grad.set(i, l, -w / (p * n as f64));
        }
    }
    Ok((total / n as f64, grad))
}

/// Sum of squared weights; biases excluded.
pub fn l2_regularization(params: &ParameterStore) -> f64 {
    params
        .iter()
        .filter(|(name, _)| !ParameterStore::is_bias(name))
        .map(|(_, m)| m.sum_sq())
        .sum()
}

/// Adds `scale · ∂L2/∂params` to `grads`.
pub fn l2_gradient(params: &ParameterStore, scale: f64, grads: &mut Gradients) -> Result<()> {
    for (name, m) in params.iter() {
        if ParameterStore::is_bias(name) {
            continue;
        }
        grads.get_mut(name)?.axpy(2.0 * scale, m)?;
    }
    Ok(())
}

/// Orientation wrap helper exposed for tests and diagnostics.
pub fn wrap_axial_residual(r: f64) -> f64 {
    let w = wrap_residual(r, PI);
    debug_assert!(w > -FRAC_PI_2 - 1e-12 && w <= FRAC_PI_2 + 1e-12);
    w
}
