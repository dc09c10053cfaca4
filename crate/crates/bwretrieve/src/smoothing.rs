//! Smoothing-level schedules for the dynamically smoothed solver.
//!
//! A schedule maps per-iteration diagnostics to the next smoothing level
//! eps_t. Every kind emits a nonincreasing sequence bounded below by
//! `epsilon_min`:
//!
//! * `Fixed(e)`: constant e (e = 0 recovers the unsmoothed update);
//! * `Oracle`: 2 sqrt(dist / ||u_star||), needs ground truth;
//! * `LossHeuristic(c)`: c * loss^(1/4), an observable stand-in for the
//!   oracle since the loss scales like the squared distance near the signal;
//! * `QuantileHeuristic(gamma)`: the gamma-quantile of the squared amplitude
//!   residuals, which tracks the residual scale while ignoring the largest
//!   (sign-mismatched) ones.

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON0: f64 = 1.0;
pub const DEFAULT_EPSILON_MIN: f64 = 0.0;
pub const DEFAULT_GAMMA: f64 = 0.25;
pub const DEFAULT_C_LOSS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Fixed(f64),
    Oracle,
    LossHeuristic { c_loss: f64 },
    QuantileHeuristic { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingSchedule {
    kind: ScheduleKind,
    epsilon0: f64,
    epsilon_min: f64,
}

impl SmoothingSchedule {
    pub fn new(kind: ScheduleKind, epsilon0: f64, epsilon_min: f64) -> Result<Self> {
        if !(epsilon0.is_finite() && epsilon0 > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon0 must be positive, got {epsilon0}")));
        }
        if !(epsilon_min.is_finite() && epsilon_min >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_min must be nonnegative, got {epsilon_min}"
            )));
        }
        if epsilon0 < epsilon_min {
            return Err(Error::InvalidConfig(format!(
                "epsilon0 = {epsilon0} is below epsilon_min = {epsilon_min}"
            )));
        }
        match kind {
            ScheduleKind::Fixed(e) if !(e.is_finite() && e >= 0.0) => {
                return Err(Error::InvalidConfig(format!(
                    "fixed smoothing level must be nonnegative, got {e}"
                )));
            }
            ScheduleKind::LossHeuristic { c_loss } if !(c_loss.is_finite() && c_loss > 0.0) => {
                return Err(Error::InvalidConfig(format!(
                    "loss-heuristic constant must be positive, got {c_loss}"
                )));
            }
            ScheduleKind::QuantileHeuristic { gamma } if !(gamma > 0.0 && gamma < 1.0) => {
                return Err(Error::InvalidConfig(format!(
                    "quantile level must lie in (0, 1), got {gamma}"
                )));
            }
            _ => {}
        }
        Ok(SmoothingSchedule { kind, epsilon0, epsilon_min })
    }

    pub fn fixed(e: f64) -> Result<Self> {
        Self::new(ScheduleKind::Fixed(e), DEFAULT_EPSILON0, DEFAULT_EPSILON_MIN)
    }

    pub fn oracle() -> Result<Self> {
        Self::new(ScheduleKind::Oracle, DEFAULT_EPSILON0, DEFAULT_EPSILON_MIN)
    }

    pub fn loss_heuristic(c_loss: f64) -> Result<Self> {
        Self::new(ScheduleKind::LossHeuristic { c_loss }, DEFAULT_EPSILON0, DEFAULT_EPSILON_MIN)
    }

    pub fn quantile_heuristic(gamma: f64) -> Result<Self> {
        Self::new(ScheduleKind::QuantileHeuristic { gamma }, DEFAULT_EPSILON0, DEFAULT_EPSILON_MIN)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Smoothing level fed to the first [`SmoothingSchedule::next_epsilon`]
    /// call as `prev_epsilon`.
    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn epsilon_min(&self) -> f64 {
        self.epsilon_min
    }

    /// Next smoothing level from the current diagnostics.
    ///
    /// `loss` is the unsmoothed (amplitude) objective value at the current
    /// iterate, `residuals_sq` its squared residuals; both must be finite.
    /// `dist_to_truth` and `signal_norm` are only consulted by the oracle
    /// kind and may be absent otherwise.
    pub fn next_epsilon(
        &self,
        prev_epsilon: f64,
        loss: f64,
        residuals_sq: &[f64],
        dist_to_truth: Option<f64>,
        signal_norm: Option<f64>,
    ) -> Result<f64> {
        let proposed = match self.kind {
            ScheduleKind::Fixed(e) => e,
            ScheduleKind::Oracle => {
                let dist = dist_to_truth.ok_or(Error::MissingOracle)?;
                let norm = signal_norm.ok_or(Error::MissingOracle)?;
                if !(dist.is_finite() && dist >= 0.0) || !(norm.is_finite() && norm > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "oracle schedule got dist = {dist}, signal norm = {norm}"
                    )));
                }
                prev_epsilon.min(2.0 * (dist / norm).sqrt())
            }
            ScheduleKind::LossHeuristic { c_loss } => {
                if !(loss.is_finite() && loss >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "loss heuristic needs a finite nonnegative loss, got {loss}"
                    )));
                }
                prev_epsilon.min(c_loss * loss.powf(0.25))
            }
            ScheduleKind::QuantileHeuristic { gamma } => {
                prev_epsilon.min(quantile(residuals_sq, gamma)?)
            }
        };
        Ok(proposed.max(self.epsilon_min))
    }
}

/// The gamma-quantile used by the quantile heuristic: with the values sorted
/// ascending as b(1) <= ... <= b(n), returns b(k) for k = max(1, floor(gamma n)).
///
/// On tie-free input this is the largest value c in the list with
/// |{i : b_i <= c}| <= gamma n, attained at an order statistic; when even the
/// smallest value fails that count condition the smallest value is returned.
pub fn quantile(values: &[f64], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("quantile of an empty list".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInput(format!("quantile level must lie in (0, 1), got {gamma}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let k = ((gamma * values.len() as f64).floor() as usize).max(1);
    Ok(sorted[k - 1])
}
