//! Fixed-horizon exponentially weighted forecaster over finitely many experts.
//!
//! Expert `i` carries weight proportional to `exp(-eta * cum_loss[i])`; the
//! forecaster predicts by sampling an expert from the normalized weights.
//! With `eta = sqrt((8/n) ln N)` the sampled cumulative loss stays within
//! [`regret_bound`] of the best expert with probability `1 - delta`.
//!
//! Weights are computed in the log domain with the smallest cumulative loss
//! subtracted before exponentiation: late blocks of the epoch learner reach
//! exponents near 290, far past `exp(-x)` underflow if taken naively. After
//! the shift the best expert sits at exponent zero, so the normalizer is
//! always at least 1 and the weight vector depends only on loss differences.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HedgeError {
    #[error("horizon and expert count must be positive (n={n}, experts={experts})")]
    EmptyInstance { n: usize, experts: usize },
    #[error("delta must lie in (0,1), got {0}")]
    DeltaOutOfRange(f64),
}

/// `eta = sqrt((8/n) ln N)`; zero exactly when there is a single expert.
pub fn learning_rate(n: usize, experts: usize) -> Result<f64, HedgeError> {
    if n == 0 || experts == 0 {
        return Err(HedgeError::EmptyInstance { n, experts });
    }
    Ok((8.0 / n as f64 * (experts as f64).ln()).sqrt())
}

/// Additive slack over the best expert's cumulative loss that holds with
/// probability `1 - delta`: `sqrt(n/2 ln N) + sqrt(n/2 ln(1/delta))`.
pub fn regret_bound(n: usize, experts: usize, delta: f64) -> Result<f64, HedgeError> {
    if n == 0 || experts == 0 {
        return Err(HedgeError::EmptyInstance { n, experts });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HedgeError::DeltaOutOfRange(delta));
    }
    let half_n = 0.5 * n as f64;
    Ok((half_n * (experts as f64).ln()).sqrt() + (half_n * (1.0 / delta).ln()).sqrt())
}

/// Normalized sampling weights from cumulative losses.
///
/// Entry `i` is proportional to `exp(-eta * cum_loss[i])`. All-zero losses
/// (block starts) and `eta = 0` both give the exactly uniform vector.
pub fn weights(cum_loss: &[f64], eta: f64) -> Vec<f64> {
    assert!(!cum_loss.is_empty(), "weights over an empty expert set");
    let min = cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = cum_loss.iter().map(|&c| (-eta * (c - min)).exp()).collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Inverse-CDF sample: the smallest index whose cumulative weight exceeds `u`.
///
/// `u` must come from `[0,1)`. If rounding leaves the total just below `u`,
/// the last positively weighted index is returned.
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    debug_assert!((0.0..1.0).contains(&u));
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if acc > u {
            return i;
        }
    }
    last_positive
}

/// Configuration of one finite Hedge instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeConfig {
    pub n: usize,
    pub experts: usize,
    pub eta: f64,
}

impl HedgeConfig {
    pub fn new(n: usize, experts: usize) -> Result<Self, HedgeError> {
        Ok(Self { n, experts, eta: learning_rate(n, experts)? })
    }
}

/// Running state: the current step (1-based) and unnormalized cumulative
/// losses, so `eta * cum_loss[i]` is exactly the exponent `eta (t-1) L_{t-1,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    pub t: usize,
    pub cum_loss: Vec<f64>,
}

impl HedgeState {
    pub fn new(experts: usize) -> Self {
        Self { t: 1, cum_loss: vec![0.0; experts] }
    }

    pub fn weights(&self, config: &HedgeConfig) -> Vec<f64> {
        weights(&self.cum_loss, config.eta)
    }

    /// Absorbs one round of per-expert losses and advances the step.
    pub fn observe(&mut self, step_losses: &[f64]) {
        assert_eq!(step_losses.len(), self.cum_loss.len());
        for (c, l) in self.cum_loss.iter_mut().zip(step_losses) {
            *c += l;
        }
        self.t += 1;
    }
}
