//! Monte Carlo estimators for `P(xi_T(1) >= x)` and the LLN sup-event.
//!
//! Replica `i` of an experiment with seed `s` always draws from
//! [`replica_rng(s, i)`](crate::model::replica_rng), so results do not depend
//! on how replicas are scheduled across threads. Per-replica outputs are
//! collected in replica order and folded sequentially.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    derive_seed, replica_rng, scale_path, simulate, simulate_streams, tail_threshold,
    ModelParams, PathSample, SimSpec, Simulator, StreamSchedule,
};
use crate::paths::ConditioningSample;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Catastrophe-rate multiplier used by [`default_tilt`].
pub const DEFAULT_THETA2: f64 = 0.05;

/// Fraction of `n` below which the effective sample size is flagged.
pub const LOW_ESS_FRACTION: f64 = 0.01;

/// Exponential tilt of the two Poisson streams on the scaled window `[s, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltConfig {
    pub switch_time: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl TiltConfig {
    pub fn new(switch_time: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&switch_time) {
            return Err(Error::invalid("tilt-s", switch_time, "must lie in [0, 1)"));
        }
        for (name, v) in [("tilt-theta1", theta1), ("tilt-theta2", theta2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, v, "must be positive and finite"));
            }
        }
        Ok(Self {
            switch_time,
            theta1,
            theta2,
        })
    }

    pub fn identity() -> Self {
        Self {
            switch_time: 0.0,
            theta1: 1.0,
            theta2: 1.0,
        }
    }

    pub fn schedule(&self, params: &ModelParams, horizon: f64) -> StreamSchedule {
        let base = [params.birth_rate(), params.catastrophe_rate()];
        let tilted = [base[0] * self.theta1, base[1] * self.theta2];
        StreamSchedule::new(self.switch_time * horizon, base, tilted)
            .expect("validated tilt yields a valid schedule")
    }
}

/// Tilt that makes the optimal path typical: births at the path's slope
/// after its breakpoint, catastrophes suppressed by [`DEFAULT_THETA2`].
pub fn default_tilt(x: f64, params: &ModelParams) -> Result<TiltConfig> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid("x", x, "must be positive"));
    }
    let alpha = params.alpha();
    let lambda_share = params.lambda() / (params.lambda() + params.mu());
    if x < alpha {
        TiltConfig::new(1.0 - x / alpha, 1.0 / lambda_share, DEFAULT_THETA2)
    } else {
        TiltConfig::new(0.0, x / (alpha * lambda_share), DEFAULT_THETA2)
    }
}

/// Samples one path under the tilted intensities.
pub fn simulate_tilted(params: &ModelParams, tilt: &TiltConfig, spec: &SimSpec) -> PathSample {
    simulate_streams(
        &tilt.schedule(params, spec.horizon()),
        spec.horizon(),
        &mut spec.rng(),
    )
}

/// `ln(dP/dQ)` for a path drawn under the tilt. Only the Poisson streams are
/// reweighted; the catastrophe landing draws have the same law under both
/// measures and cancel.
pub fn log_likelihood_ratio(
    path: &PathSample,
    tilt: &TiltConfig,
    params: &ModelParams,
    horizon: f64,
) -> f64 {
    let start = tilt.switch_time * horizon;
    let span = horizon - start;
    let (births, catastrophes) = path.counts_after(start);
    (tilt.theta1 - 1.0) * params.birth_rate() * span - births as f64 * tilt.theta1.ln()
        + (tilt.theta2 - 1.0) * params.catastrophe_rate() * span
        - catastrophes as f64 * tilt.theta2.ln()
}

pub fn likelihood_ratio(
    path: &PathSample,
    tilt: &TiltConfig,
    params: &ModelParams,
    horizon: f64,
) -> f64 {
    log_likelihood_ratio(path, tilt, params, horizon).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Is,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub p_hat: f64,
    /// `-ln(p_hat) / T`; `None` when no replica hit the event.
    pub log_rate: Option<f64>,
    pub std_err: f64,
    pub ci95: [f64; 2],
    pub n: u64,
    pub hits: u64,
    pub ess: Option<f64>,
    pub low_ess: bool,
    pub seed: u64,
}

fn check_common(horizon: f64, n: u64) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("T", horizon, "must be positive and finite"));
    }
    if n == 0 {
        return Err(Error::invalid("n", 0.0, "must be >= 1"));
    }
    Ok(())
}

fn log_rate_from(log_p: f64, horizon: f64) -> f64 {
    // + 0.0 turns -0.0 into 0.0 when p_hat == 1
    -log_p / horizon + 0.0
}

/// Fraction estimate with a Wilson score interval.
fn naive_result(hits: u64, n: u64, horizon: f64, seed: u64) -> EstimateResult {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    EstimateResult {
        method: Method::Naive,
        p_hat: p,
        log_rate: (hits > 0).then(|| log_rate_from(p.ln(), horizon)),
        std_err: (p * (1.0 - p) / nf).sqrt(),
        // the score interval contains p exactly; min/max only absorbs rounding
        ci95: [(centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p)],
        n,
        hits,
        ess: None,
        low_ess: false,
        seed,
    }
}

/// Weighted-indicator estimate from per-replica `(ln w, hit)` pairs.
///
/// Sums are taken relative to the largest log-weight so that estimates far
/// below `f64::MIN_POSITIVE` still produce a finite `log_rate`.
fn weighted_result(samples: &[(f64, bool)], horizon: f64, seed: u64) -> EstimateResult {
    let n = samples.len() as u64;
    let nf = n as f64;

    let lmax_all = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let (s1, s2) = samples.iter().fold((0.0, 0.0), |(a, b), s| {
        let w = (s.0 - lmax_all).exp();
        (a + w, b + w * w)
    });
    let ess = s1 * s1 / s2;

    let hits = samples.iter().filter(|s| s.1).count() as u64;
    let lmax_hit = samples
        .iter()
        .filter(|s| s.1)
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let (h1, h2) = if hits == 0 {
        (0.0, 0.0)
    } else {
        samples.iter().filter(|s| s.1).fold((0.0, 0.0), |(a, b), s| {
            let h = (s.0 - lmax_hit).exp();
            (a + h, b + h * h)
        })
    };
    let mean = h1 / nf;
    let var = ((h2 - nf * mean * mean) / (nf - 1.0).max(1.0)).max(0.0);
    let (p_hat, std_err, log_rate) = if hits == 0 {
        (0.0, 0.0, None)
    } else {
        let scale = lmax_hit.exp();
        (
            mean * scale,
            (var / nf).sqrt() * scale,
            Some(log_rate_from(lmax_hit + mean.ln(), horizon)),
        )
    };
    EstimateResult {
        method: Method::Is,
        p_hat,
        log_rate,
        std_err,
        ci95: [(p_hat - Z95 * std_err).max(0.0), p_hat + Z95 * std_err],
        n,
        hits,
        ess: Some(ess),
        low_ess: ess < LOW_ESS_FRACTION * nf,
        seed,
    }
}

fn replicas<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n as usize).into_par_iter().map(|i| f(i as u64)).collect()
}

/// Plain fraction of untilted replicas (two-stream simulator) with
/// `xi_T(1) >= x`.
pub fn estimate_tail_naive(
    params: &ModelParams,
    horizon: f64,
    x: f64,
    n: u64,
    seed: u64,
) -> Result<EstimateResult> {
    check_common(horizon, n)?;
    let threshold = tail_threshold(x, horizon);
    let schedule = StreamSchedule::untilted(params);
    let hits = replicas(n, |i| {
        let path = simulate_streams(&schedule, horizon, &mut replica_rng(seed, i));
        path.terminal_state() >= threshold
    })
    .into_iter()
    .filter(|h| *h)
    .count() as u64;
    Ok(naive_result(hits, n, horizon, seed))
}

/// Importance-sampling estimate under `tilt`. Replica `i` consumes the same
/// random stream as in [`estimate_tail_naive`], so the identity tilt
/// reproduces the naive point estimate exactly.
pub fn estimate_tail_is(
    params: &ModelParams,
    horizon: f64,
    x: f64,
    tilt: &TiltConfig,
    n: u64,
    seed: u64,
) -> Result<EstimateResult> {
    check_common(horizon, n)?;
    let threshold = tail_threshold(x, horizon);
    let schedule = tilt.schedule(params, horizon);
    let samples = replicas(n, |i| {
        let path = simulate_streams(&schedule, horizon, &mut replica_rng(seed, i));
        (
            log_likelihood_ratio(&path, tilt, params, horizon),
            path.terminal_state() >= threshold,
        )
    });
    Ok(weighted_result(&samples, horizon, seed))
}

/// Fraction of replicas whose scaled path exceeds `eps` somewhere on `[0, 1]`.
pub fn lln_sup_fraction(
    params: &ModelParams,
    horizon: f64,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<EstimateResult> {
    check_common(horizon, n)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("eps", eps, "must be positive"));
    }
    let schedule = StreamSchedule::untilted(params);
    let hits = replicas(n, |i| {
        let path = simulate_streams(&schedule, horizon, &mut replica_rng(seed, i));
        path.max_state() as f64 / horizon > eps
    })
    .into_iter()
    .filter(|h| *h)
    .count() as u64;
    Ok(naive_result(hits, n, horizon, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Estimator {
    Naive,
    Is { tilt: TiltConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub horizon: f64,
    pub result: Result<EstimateResult>,
}

/// Seed used for horizon `T` in a sweep; depends only on `(seed, T)`.
pub fn sweep_seed(seed: u64, horizon: f64) -> u64 {
    derive_seed(seed, horizon.to_bits())
}

/// Runs the estimator at every horizon. Failures are reported per point.
pub fn rate_curve_sweep(
    params: &ModelParams,
    x: f64,
    horizons: &[f64],
    estimator: &Estimator,
    n: u64,
    seed: u64,
) -> Vec<SweepPoint> {
    horizons
        .iter()
        .map(|&horizon| {
            let s = sweep_seed(seed, horizon);
            let result = match estimator {
                Estimator::Naive => estimate_tail_naive(params, horizon, x, n, s),
                Estimator::Is { tilt } => estimate_tail_is(params, horizon, x, tilt, n, s),
            };
            SweepPoint { horizon, result }
        })
        .collect()
}

/// Empirical law of the terminal state over `n` replicas of `simulator`.
pub fn empirical_terminal_law(
    simulator: Simulator,
    params: &ModelParams,
    horizon: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_common(horizon, n)?;
    let states = replicas(n, |i| {
        let spec = SimSpec::new(horizon, seed, i).expect("horizon checked");
        simulate(simulator, params, &spec).terminal_state()
    });
    let top = states.iter().copied().max().unwrap_or(0) as usize;
    let mut law = vec![0.0; top + 1];
    for s in states {
        law[s as usize] += 1.0;
    }
    law.iter_mut().for_each(|p| *p /= n as f64);
    Ok(law)
}

/// Scaled paths of the tilted replicas that end at or above `x`, with their
/// likelihood-ratio weights rescaled so the largest equals one.
pub fn conditioned_samples(
    params: &ModelParams,
    horizon: f64,
    x: f64,
    tilt: &TiltConfig,
    n: u64,
    seed: u64,
    grid_size: usize,
) -> Result<Vec<ConditioningSample>> {
    check_common(horizon, n)?;
    if grid_size == 0 {
        return Err(Error::invalid("grid", 0.0, "must be >= 1"));
    }
    let threshold = tail_threshold(x, horizon);
    let schedule = tilt.schedule(params, horizon);
    let hits: Vec<(f64, PathSample)> = replicas(n, |i| {
        let path = simulate_streams(&schedule, horizon, &mut replica_rng(seed, i));
        (path.terminal_state() >= threshold)
            .then(|| (log_likelihood_ratio(&path, tilt, params, horizon), path))
    })
    .into_iter()
    .flatten()
    .collect();
    let lmax = hits.iter().map(|h| h.0).fold(f64::NEG_INFINITY, f64::max);
    hits.into_iter()
        .map(|(lw, path)| {
            Ok(ConditioningSample {
                path: scale_path(&path, horizon, grid_size)?,
                weight: (lw - lmax).exp(),
                hit: true,
            })
        })
        .collect()
}
