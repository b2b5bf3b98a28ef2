//! Training objectives.
//!
//! The soft-max minimax objective couples all rows: with per-row losses
//! `L_i = (theta_i - pred_i)^2` it is `S = ln(sum_i exp(K L_i)) / K`, a smooth
//! upper bound on `max_i L_i`. Its gradient is `w_i * dL_i/dpred_i` with
//! soft-max weights `w_i = exp(K (L_i - S))`; the Hessian returned here keeps
//! only the diagonal `w_i * d2L_i/dpred_i2 = 2 w_i` and drops the terms coming
//! from the weights themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stabilised `ln(sum exp(K v_i)) / K`.
pub fn logsumexp(v: &[f64], k: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::domain("logsumexp of an empty vector"));
    }
    if !(k > 0.0) {
        return Err(Error::domain(format!("soft-max sharpness must be positive, got {k}")));
    }
    Ok(logsumexp_unchecked(v, k))
}

fn logsumexp_unchecked(v: &[f64], k: f64) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = v.iter().map(|&x| (k * (x - max)).exp()).sum();
    max + sum.ln() / k
}

/// Soft-max weights `exp(K (v_i - logsumexp(v)))`, written into `out`.
pub fn softmax_weights(v: &[f64], k: f64, out: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (k * (x - max)).exp();
        sum += *o;
    }
    let inv = sum.recip();
    out.iter_mut().for_each(|o| *o *= inv);
}

/// Gradient and Gauss-Newton diagonal Hessian of the soft-max minimax loss
/// with squared per-row losses.
pub fn softmax_minimax_grad_hess(
    predictions: &[f64],
    targets: &[f64],
    k: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if predictions.len() != targets.len() {
        return Err(Error::domain(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::domain("soft-max loss needs at least one row"));
    }
    if !(k > 0.0) {
        return Err(Error::domain(format!("soft-max sharpness must be positive, got {k}")));
    }
    let mut grad = vec![0.0; predictions.len()];
    let mut hess = vec![0.0; predictions.len()];
    let mut scratch = vec![0.0; predictions.len()];
    softmax_fill(predictions, targets, k, &mut grad, &mut hess, &mut scratch);
    Ok((grad, hess))
}

fn softmax_fill(p: &[f64], t: &[f64], k: f64, grad: &mut [f64], hess: &mut [f64], losses: &mut [f64]) {
    for ((l, &pi), &ti) in losses.iter_mut().zip(p).zip(t) {
        let r = ti - pi;
        *l = r * r;
    }
    softmax_weights(losses, k, hess);
    for i in 0..p.len() {
        let w = hess[i];
        grad[i] = -2.0 * w * (t[i] - p[i]);
        hess[i] = 2.0 * w;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    SoftmaxMinimax,
}

fn default_k() -> f64 {
    1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Soft-max sharpness; ignored by the squared loss.
    #[serde(default = "default_k")]
    pub k: f64,
}

impl LossSpec {
    pub fn squared() -> Self {
        Self {
            kind: LossKind::Squared,
            k: default_k(),
        }
    }

    pub fn softmax_minimax(k: f64) -> Self {
        Self {
            kind: LossKind::SoftmaxMinimax,
            k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::config("loss.k", format!("must be positive and finite, got {}", self.k)));
        }
        Ok(())
    }

    /// Training objective over all rows.
    ///
    /// Squared loss is the mean of `(target - pred)^2`.
    pub fn value(&self, predictions: &[f64], targets: &[f64]) -> f64 {
        match self.kind {
            LossKind::Squared => {
                let s: f64 = predictions
                    .iter()
                    .zip(targets)
                    .map(|(p, t)| (t - p) * (t - p))
                    .sum();
                s / predictions.len() as f64
            }
            LossKind::SoftmaxMinimax => {
                let losses: Vec<f64> = predictions
                    .iter()
                    .zip(targets)
                    .map(|(p, t)| (t - p) * (t - p))
                    .collect();
                logsumexp_unchecked(&losses, self.k)
            }
        }
    }

    /// Per-row gradient and Hessian written into the output slices.
    ///
    /// Both objectives are differentiated as sums over rows, so the soft-max
    /// derivatives are those of `M * S`. Leaf values are unaffected; the L1
    /// threshold and the Hessian guard then act on per-row scale for either loss.
    pub(crate) fn grad_hess(
        &self,
        predictions: &[f64],
        targets: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
        scratch: &mut [f64],
    ) {
        match self.kind {
            LossKind::Squared => {
                for i in 0..predictions.len() {
                    grad[i] = 2.0 * (predictions[i] - targets[i]);
                    hess[i] = 2.0;
                }
            }
            LossKind::SoftmaxMinimax => {
                softmax_fill(predictions, targets, self.k, grad, hess, scratch);
                let m = predictions.len() as f64;
                grad.iter_mut().for_each(|g| *g *= m);
                hess.iter_mut().for_each(|h| *h *= m);
            }
        }
    }

    /// Best constant prediction.
    pub fn initial_prediction(&self, targets: &[f64]) -> f64 {
        match self.kind {
            LossKind::Squared => targets.iter().sum::<f64>() / targets.len() as f64,
            LossKind::SoftmaxMinimax => softmax_constant(targets, self.k),
        }
    }
}

/// Minimiser over `c` of the soft-max of `(t_i - c)^2`.
///
/// The objective is convex in `c` and its derivative
/// `sum_i w_i(c) * 2 (c - t_i)` is increasing, so bisection on the derivative
/// sign over `[min t, max t]` converges to the unique minimiser.
fn softmax_constant(targets: &[f64], k: f64) -> f64 {
    let mut lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut losses = vec![0.0; targets.len()];
    let mut w = vec![0.0; targets.len()];
    let mut slope = |c: f64| {
        for (l, t) in losses.iter_mut().zip(targets) {
            *l = (t - c) * (t - c);
        }
        softmax_weights(&losses, k, &mut w);
        w.iter().zip(targets).map(|(wi, t)| wi * (c - t)).sum::<f64>()
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
