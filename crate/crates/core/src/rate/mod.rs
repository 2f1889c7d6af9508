//! Rate functions of the endpoint large-deviation principle.
//!
//! All functions use the convention `0 ln 0 = 0`, so the rates are continuous
//! at the origin.

mod bounds;
mod variational;

pub use bounds::{nu2_lower_tail_bound, uniform_sum_bound, uniform_sum_bound_counts, BoundQuery};
pub use variational::{
    rate_via_variational, variational_f, VariationalPoint, VariationalSolution,
    EVALUATION_BUDGET,
};

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// A value in `[0, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    Infinite,
}

impl Rate {
    pub fn is_finite(&self) -> bool {
        matches!(self, Rate::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Rate::Finite(v) => Some(v),
            Rate::Infinite => None,
        }
    }

    /// As an `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Finite(v) => write!(f, "{v}"),
            Rate::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Finite(v) => s.serialize_f64(*v),
            Rate::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `x ln(x k)` with the `x = 0` limit taken as 0.
pub(crate) fn xlogx(x: f64, k: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x * k).ln()
    }
}

/// Endpoint rate function `I(x)`: linear with slope `ln((lambda+mu)/lambda)`
/// up to `alpha`, Poisson-type beyond.
pub fn rate_i(x: f64, params: &ModelParams) -> Rate {
    if x.is_nan() || x < 0.0 {
        return Rate::Infinite;
    }
    let (lambda, mu, alpha) = (params.lambda(), params.mu(), params.alpha());
    if x < alpha {
        Rate::Finite(x * ((lambda + mu) / lambda).ln())
    } else {
        Rate::Finite(xlogx(x, (lambda + mu) / (alpha * lambda)) - x + alpha)
    }
}

/// Rate of `(nu1(T) - nu1(Delta T)) / T`, the Poisson Cramér transform with
/// mean `alpha lambda (1 - Delta) / (lambda + mu)`.
pub fn rate_i1(x: f64, start_fraction: f64, params: &ModelParams) -> Result<Rate> {
    if !(0.0..1.0).contains(&start_fraction) {
        return Err(Error::invalid("Delta", start_fraction, "must lie in [0, 1)"));
    }
    if x.is_nan() || x < 0.0 {
        return Ok(Rate::Infinite);
    }
    let mean = params.birth_rate() * (1.0 - start_fraction);
    Ok(Rate::Finite(xlogx(x, 1.0 / mean) - x + mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l: f64, m: f64, a: f64) -> ModelParams {
        ModelParams::new(l, m, a).unwrap()
    }

    #[test]
    fn rate_i_values() {
        let unit = p(1.0, 1.0, 1.0);
        assert_eq!(rate_i(-0.1, &unit), Rate::Infinite);
        assert_eq!(rate_i(0.0, &unit), Rate::Finite(0.0));
        let r = rate_i(1.0, &p(1.0, 1.0, 2.0)).value();
        assert!((r - 2f64.ln()).abs() < 1e-15);
        let r = rate_i(2.0, &unit).value();
        assert!((r - (2.0 * 4f64.ln() - 1.0)).abs() < 1e-14);
        assert!((r - 1.772588722239781).abs() < 1e-12);
    }

    #[test]
    fn rate_i1_values() {
        let params = p(2.0, 3.0, 1.5);
        for delta in [0.0, 0.3, 0.9] {
            let mean = 1.5 * 2.0 * (1.0 - delta) / 5.0;
            assert!(rate_i1(mean, delta, &params).unwrap().value().abs() < 1e-15);
            assert_eq!(rate_i1(-1e-9, delta, &params).unwrap(), Rate::Infinite);
            let at_zero = rate_i1(0.0, delta, &params).unwrap().value();
            assert!((at_zero - mean).abs() < 1e-15);
        }
        assert!(rate_i1(1.0, 1.0, &params).is_err());
        assert!(rate_i1(1.0, -0.1, &params).is_err());
    }

    #[test]
    fn branches_meet_at_alpha() {
        let params = p(2.0, 3.0, 1.5);
        let left = 1.5 * (5.0f64 / 2.0).ln();
        assert!((rate_i(1.5, &params).value() - left).abs() < 1e-12);
    }

    #[test]
    fn rate_display() {
        assert_eq!(Rate::Infinite.to_string(), "inf");
        assert_eq!(Rate::Finite(0.5).to_string(), "0.5");
    }
}
