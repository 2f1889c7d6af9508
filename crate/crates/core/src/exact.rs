//! Simulation-free reference distributions.
//!
//! The law of `xi(T)` is the Poisson(`alpha T`) mixture of the embedded
//! chain's `k`-step laws. Both the event count and the state space are
//! truncated, and every unit of mass lost to either cut is carried in
//! [`Pmf::truncation_error`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{tail_threshold, ModelParams};

/// Transition matrix of the embedded chain on `{0, ..., M}`.
///
/// Row `M` sends its birth mass to an absorbing overflow outside the matrix;
/// that mass is reported in `overflow[M]` so each row plus its overflow sums
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMatrix {
    size: usize,
    probs: Vec<f64>,
    overflow: Vec<f64>,
}

impl ChainMatrix {
    pub fn cap(&self) -> usize {
        self.size - 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.size..(i + 1) * self.size]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.size + j]
    }

    pub fn overflow(&self, i: usize) -> f64 {
        self.overflow[i]
    }

    /// One vector-matrix product `dist * P`. Returns the new distribution
    /// and the mass that left through the overflow.
    pub fn propagate(&self, dist: &[f64]) -> (Vec<f64>, f64) {
        let mut next = vec![0.0; self.size];
        let mut lost = 0.0;
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (n, &q) in next.iter_mut().zip(self.row(i)) {
                *n += p * q;
            }
            lost += p * self.overflow[i];
        }
        (next, lost)
    }
}

pub fn chain_matrix(params: &ModelParams, cap: usize) -> Result<ChainMatrix> {
    if cap < 1 {
        return Err(Error::invalid("M", cap as f64, "must be >= 1"));
    }
    let size = cap + 1;
    let birth = params.birth_probability();
    let mut probs = vec![0.0; size * size];
    let mut overflow = vec![0.0; size];
    probs[1] = 1.0;
    for i in 1..size {
        let each = (1.0 - birth) / i as f64;
        let row = &mut probs[i * size..(i + 1) * size];
        row[..i].iter_mut().for_each(|r| *r = each);
        if i + 1 < size {
            row[i + 1] = birth;
        } else {
            overflow[i] = birth;
        }
    }
    Ok(ChainMatrix {
        size,
        probs,
        overflow,
    })
}

/// Law of the chain after exactly `steps` steps from 0, plus the overflow.
pub fn step_distribution(params: &ModelParams, cap: usize, steps: usize) -> Result<(Vec<f64>, f64)> {
    let matrix = chain_matrix(params, cap)?;
    let mut dist = vec![0.0; cap + 1];
    dist[0] = 1.0;
    let mut lost = 0.0;
    for _ in 0..steps {
        let (next, l) = matrix.propagate(&dist);
        dist = next;
        lost += l;
    }
    Ok((dist, lost))
}

/// Truncated probability mass function with accounted missing mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub masses: Vec<f64>,
    pub truncation_error: f64,
}

impl Pmf {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.truncation_error
    }
}

/// Poisson pmf terms `0..=k_max` computed in log space and the exact tail
/// mass beyond `k_max`.
fn poisson_terms(rate: f64, k_max: usize) -> (Vec<f64>, f64) {
    if rate == 0.0 {
        let mut w = vec![0.0; k_max + 1];
        w[0] = 1.0;
        return (w, 0.0);
    }
    let ln_rate = rate.ln();
    let mut log_w = -rate;
    let mut terms = Vec::with_capacity(k_max + 1);
    terms.push(log_w.exp());
    for k in 1..=k_max {
        log_w += ln_rate - (k as f64).ln();
        terms.push(log_w.exp());
    }
    let mut tail = 0.0;
    let mut k = k_max + 1;
    loop {
        log_w += ln_rate - (k as f64).ln();
        let term = log_w.exp();
        tail += term;
        if k as f64 > rate && term <= tail * 1e-17 {
            break;
        }
        k += 1;
    }
    (terms, tail)
}

/// Law of `xi(T)` on `{0, ..., M}` using at most `K` clock events.
///
/// Fails if the accounted truncation error exceeds `budget`.
pub fn exact_xi_distribution(
    params: &ModelParams,
    horizon: f64,
    cap: usize,
    max_events: usize,
    budget: f64,
) -> Result<Pmf> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid("T", horizon, "must be non-negative"));
    }
    let matrix = chain_matrix(params, cap)?;
    let (weights, poisson_tail) = poisson_terms(params.alpha() * horizon, max_events);
    let mut dist = vec![0.0; cap + 1];
    dist[0] = 1.0;
    let mut masses = vec![0.0; cap + 1];
    // Overflowed mass after k steps, weighted by P(N = k).
    let mut lost_so_far = 0.0;
    let mut truncation_error = poisson_tail;
    for (k, &w) in weights.iter().enumerate() {
        if k > 0 {
            let (next, lost) = matrix.propagate(&dist);
            dist = next;
            lost_so_far += lost;
        }
        for (m, &p) in masses.iter_mut().zip(&dist) {
            *m += w * p;
        }
        truncation_error += w * lost_so_far;
    }
    if truncation_error > budget {
        return Err(Error::TruncationBudget {
            error: truncation_error,
            budget,
        });
    }
    Ok(Pmf {
        masses,
        truncation_error,
    })
}

/// `P(xi(T) >= xT)` with its truncation uncertainty: the true value lies in
/// `[probability, probability + error]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub threshold: u64,
    pub probability: f64,
    pub error: f64,
}

pub fn tail_of(pmf: &Pmf, x: f64, horizon: f64) -> TailProbability {
    let threshold = tail_threshold(x, horizon);
    let probability = pmf
        .masses
        .iter()
        .skip(threshold.min(pmf.masses.len() as u64) as usize)
        .sum();
    TailProbability {
        threshold,
        probability,
        error: pmf.truncation_error,
    }
}

pub fn exact_tail(
    params: &ModelParams,
    horizon: f64,
    x: f64,
    cap: usize,
    max_events: usize,
    budget: f64,
) -> Result<TailProbability> {
    let pmf = exact_xi_distribution(params, horizon, cap, max_events, budget)?;
    Ok(tail_of(&pmf, x, horizon))
}

/// `P(U_1 + ... + U_n <= a)` for i.i.d. `U_l` uniform on `{1, ..., m}`, by
/// exact convolution.
pub fn uniform_sum_tail_exact(range: u64, terms: u64, threshold: f64) -> Result<f64> {
    if range < 1 {
        return Err(Error::invalid("m", range as f64, "must be >= 1"));
    }
    if threshold < 0.0 {
        return Ok(0.0);
    }
    let (m, n) = (range as usize, terms as usize);
    let mut pmf = vec![1.0];
    for _ in 0..n {
        // Prefix sums make each convolution with the uniform kernel O(len).
        let mut prefix = Vec::with_capacity(pmf.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            prefix.push(acc);
        }
        let len = pmf.len() + m;
        let mut next = vec![0.0; len];
        for (s, slot) in next.iter_mut().enumerate().skip(1) {
            // sum of pmf[s - r] for r in 1..=m
            let hi = s.min(pmf.len());
            let lo = s.saturating_sub(m);
            if lo < hi {
                *slot = (prefix[hi] - prefix[lo]) / m as f64;
            }
        }
        pmf = next;
    }
    let limit = threshold.floor();
    Ok(pmf
        .iter()
        .enumerate()
        .take_while(|(s, _)| (*s as f64) <= limit)
        .map(|(_, p)| p)
        .sum::<f64>()
        .min(1.0))
}

/// Poisson CDF `P(N <= k)` for `N ~ Poisson(rate)`; terms are built
/// recursively in log space.
pub fn poisson_lower_tail_exact(rate: f64, k: u64) -> Result<f64> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::invalid("rate", rate, "must be non-negative"));
    }
    if rate == 0.0 {
        return Ok(1.0);
    }
    let ln_rate = rate.ln();
    let mut log_w = -rate;
    let mut sum = log_w.exp();
    for j in 1..=k {
        log_w += ln_rate - (j as f64).ln();
        let term = log_w.exp();
        sum += term;
        if j as f64 > rate && term <= sum * 1e-18 {
            break;
        }
    }
    Ok(sum.min(1.0))
}
