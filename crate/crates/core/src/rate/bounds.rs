use serde::{Deserialize, Serialize};

use super::xlogx;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Arguments of the two tail bounds.
///
/// `count_fraction` is `c` (so `[cT]` counts), `start_fraction` is `Delta`
/// (increment over `[Delta T, T]`), `level` is `delta` (uniform range
/// `[delta T]`), and `sum_fraction` is `a` (threshold `a T`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub count_fraction: f64,
    pub start_fraction: f64,
    pub horizon: f64,
    pub level: f64,
    pub sum_fraction: f64,
}

impl BoundQuery {
    /// `[cT]`
    pub fn count(&self) -> u64 {
        (self.count_fraction * self.horizon).floor() as u64
    }

    /// `[delta T]`
    pub fn range(&self) -> u64 {
        (self.level * self.horizon).floor() as u64
    }

    fn check_horizon(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("T", self.horizon, "must be positive"));
        }
        Ok(())
    }
}

/// Chernoff bound on `P(nu2(T) - nu2(Delta T) <= c T)` obtained with the
/// exponent `r = -ln c`:
/// `exp{-m T + m c T - T c ln c}`, `m = alpha mu (1 - Delta) / (lambda + mu)`.
pub fn nu2_lower_tail_bound(b: &BoundQuery, params: &ModelParams) -> Result<f64> {
    b.check_horizon()?;
    let c = b.count_fraction;
    if !(0.0..1.0).contains(&c) {
        return Err(Error::invalid("c", c, "must lie in [0, 1)"));
    }
    if !(0.0..=1.0).contains(&b.start_fraction) {
        return Err(Error::invalid("Delta", b.start_fraction, "must lie in [0, 1]"));
    }
    let m = params.catastrophe_rate() * (1.0 - b.start_fraction);
    let t = b.horizon;
    Ok((-m * t + m * c * t - t * xlogx(c, 1.0)).exp())
}

/// `(1/[delta T])^{[cT]} exp(a T)`, the exponential-Chebyshev bound on
/// `P(sum of [cT] uniforms on {1..[delta T]} <= a T)`.
pub fn uniform_sum_bound(b: &BoundQuery) -> Result<f64> {
    b.check_horizon()?;
    if b.count_fraction.is_nan() || b.count_fraction < 0.0 {
        return Err(Error::invalid("c", b.count_fraction, "must be >= 0"));
    }
    uniform_sum_bound_counts(b.range(), b.count(), b.sum_fraction * b.horizon)
}

/// The same bound in terms of the range `m`, the number of terms `n` and the
/// absolute threshold.
pub fn uniform_sum_bound_counts(range: u64, terms: u64, threshold: f64) -> Result<f64> {
    if range == 0 {
        return Err(Error::invalid("[delta T]", 0.0, "must be >= 1"));
    }
    Ok((threshold - terms as f64 * (range as f64).ln()).exp())
}
