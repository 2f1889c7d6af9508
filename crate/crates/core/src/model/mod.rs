//! The population process: parameters, transition kernel and sample paths.

mod path;
mod sim;

pub use path::{optimal_path, scale_path, sup_value, terminal_value, OptimalPath, ScaledPath};
pub use sim::{
    simulate, simulate_decomposed, simulate_streams, simulate_subordinated, Simulator,
    StreamSchedule,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Growth weight `lambda`, catastrophe weight `mu` and event-clock rate `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    alpha: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, alpha: f64) -> Result<Self> {
        for (name, value) in [("lambda", lambda), ("mu", mu), ("alpha", alpha)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, value, "must be positive and finite"));
            }
        }
        Ok(Self { lambda, mu, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Probability that a clock event is a birth, `lambda / (lambda + mu)`.
    pub fn birth_probability(&self) -> f64 {
        self.lambda / (self.lambda + self.mu)
    }

    /// Rate of the birth stream, `alpha * lambda / (lambda + mu)`.
    pub fn birth_rate(&self) -> f64 {
        self.alpha * self.lambda / (self.lambda + self.mu)
    }

    /// Rate of the catastrophe stream, `alpha * mu / (lambda + mu)`.
    pub fn catastrophe_rate(&self) -> f64 {
        self.alpha * self.mu / (self.lambda + self.mu)
    }
}

/// Horizon and random-stream coordinates of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    horizon: f64,
    pub seed: u64,
    pub replica_index: u64,
}

impl SimSpec {
    pub fn new(horizon: f64, seed: u64, replica_index: u64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("T", horizon, "must be positive and finite"));
        }
        Ok(Self {
            horizon,
            seed,
            replica_index,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rng(&self) -> ChaCha8Rng {
        replica_rng(self.seed, self.replica_index)
    }
}

/// Random stream for replica `replica_index` of an experiment seeded with `seed`.
///
/// The ChaCha8 key is expanded from `seed` and the replica index selects the
/// 64-bit ChaCha stream id, so replicas never share or overlap keystream and
/// can be generated in any order.
pub fn replica_rng(seed: u64, replica_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica_index);
    rng
}

/// Mixes a seed with an extra key (splitmix64 finaliser on both).
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(key))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth,
    Catastrophe,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Catastrophe => "catastrophe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub kind: EventKind,
    pub post_state: u64,
}

/// One step of the embedded chain.
///
/// From `i >= 1`: `i + 1` with probability `lambda/(lambda+mu)`, otherwise a
/// uniform state in `{0, ..., i-1}`. From 0 the chain always moves to 1; the
/// kind label still follows the birth/catastrophe coin.
pub fn chain_step<R: Rng + ?Sized>(state: u64, params: &ModelParams, rng: &mut R) -> Transition {
    let u: f64 = rng.random();
    if u < params.birth_probability() {
        Transition {
            kind: EventKind::Birth,
            post_state: state + 1,
        }
    } else {
        let post_state = if state == 0 {
            1
        } else {
            rng.random_range(0..state)
        };
        Transition {
            kind: EventKind::Catastrophe,
            post_state,
        }
    }
}

/// Outgoing probabilities of the chain from `state`, indexed by target
/// state `0..=state + 1`.
pub fn kernel_row(state: u64, params: &ModelParams) -> Vec<f64> {
    let n = state as usize;
    let mut row = vec![0.0; n + 2];
    if n == 0 {
        row[1] = 1.0;
        return row;
    }
    let p = params.birth_probability();
    // 1 - p rather than mu/(lambda+mu) keeps the row summing to one.
    let each = (1.0 - p) / n as f64;
    row[..n].iter_mut().for_each(|r| *r = each);
    row[n + 1] = p;
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub post_state: u64,
}

/// A realised trajectory on `[0, T]`, stored as its change points only.
/// The initial state is always 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub events: Vec<Event>,
}

impl PathSample {
    pub fn terminal_state(&self) -> u64 {
        self.events.last().map_or(0, |e| e.post_state)
    }

    pub fn max_state(&self) -> u64 {
        self.events.iter().map(|e| e.post_state).max().unwrap_or(0)
    }

    /// State just after the last event at or before `time`.
    pub fn state_at(&self, time: f64) -> u64 {
        let idx = self.events.partition_point(|e| e.time <= time);
        if idx == 0 {
            0
        } else {
            self.events[idx - 1].post_state
        }
    }

    /// Number of births and catastrophes strictly after `time`.
    pub fn counts_after(&self, time: f64) -> (u64, u64) {
        self.events
            .iter()
            .filter(|e| e.time > time)
            .fold((0, 0), |(b, c), e| match e.kind {
                EventKind::Birth => (b + 1, c),
                EventKind::Catastrophe => (b, c + 1),
            })
    }
}

/// Smallest integer state `k` with `k / T >= x`; the event `xi_T(1) >= x`
/// is `state >= threshold`. Negative `x` gives 0.
pub fn tail_threshold(x: f64, horizon: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let mut k = (x * horizon).ceil().max(0.0) as u64;
    while k > 0 && (k - 1) as f64 / horizon >= x {
        k -= 1;
    }
    while (k as f64) / horizon < x {
        k += 1;
    }
    k
}
