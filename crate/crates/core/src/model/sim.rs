use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{chain_step, Event, EventKind, ModelParams, PathSample, SimSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulator {
    /// Embedded chain run at the jumps of a single Poisson clock.
    Subordinated,
    /// Independent birth and catastrophe Poisson streams.
    Decomposed,
}

/// Piecewise-constant intensities of the birth and catastrophe streams:
/// `before` on `[0, switch_time)`, `after` on `[switch_time, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSchedule {
    switch_time: f64,
    before: [f64; 2],
    after: [f64; 2],
}

impl StreamSchedule {
    /// The untilted rates of the model on the whole horizon.
    pub fn untilted(params: &ModelParams) -> Self {
        let rates = [params.birth_rate(), params.catastrophe_rate()];
        Self {
            switch_time: 0.0,
            before: rates,
            after: rates,
        }
    }

    pub fn new(switch_time: f64, before: [f64; 2], after: [f64; 2]) -> Result<Self> {
        if !(switch_time.is_finite() && switch_time >= 0.0) {
            return Err(Error::invalid("switch_time", switch_time, "must be >= 0"));
        }
        for r in before.into_iter().chain(after) {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("rate", r, "must be positive and finite"));
            }
        }
        Ok(Self {
            switch_time,
            before,
            after,
        })
    }

    fn segment(&self, t: f64, horizon: f64) -> (f64, [f64; 2]) {
        if t < self.switch_time {
            (self.switch_time.min(horizon), self.before)
        } else {
            (horizon, self.after)
        }
    }
}

pub fn simulate(simulator: Simulator, params: &ModelParams, spec: &SimSpec) -> PathSample {
    match simulator {
        Simulator::Subordinated => simulate_subordinated(params, spec),
        Simulator::Decomposed => simulate_decomposed(params, spec),
    }
}

/// Runs the embedded chain at the jump times of a rate-`alpha` Poisson clock.
///
/// Draw order per event: exponential gap, branch uniform, landing state.
pub fn simulate_subordinated(params: &ModelParams, spec: &SimSpec) -> PathSample {
    let mut rng = spec.rng();
    let horizon = spec.horizon();
    let mut events = Vec::new();
    let mut state = 0;
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap / params.alpha();
        if t > horizon {
            break;
        }
        let step = chain_step(state, params, &mut rng);
        state = step.post_state;
        events.push(Event {
            time: t,
            kind: step.kind,
            post_state: state,
        });
    }
    PathSample { events }
}

/// Superposes independent birth and catastrophe streams with the model's rates.
pub fn simulate_decomposed(params: &ModelParams, spec: &SimSpec) -> PathSample {
    simulate_streams(
        &StreamSchedule::untilted(params),
        spec.horizon(),
        &mut spec.rng(),
    )
}

/// Simulates the two-stream representation under arbitrary piecewise rates.
///
/// Each stream carries a unit-exponential budget of integrated intensity;
/// it fires when the budget is used up (exact time-change sampling, so
/// nothing is redrawn at the rate switch). Births add one. A catastrophe at
/// `m >= 1` removes a uniform amount on `{1, ..., m}`; at 0 it adds one.
///
/// Draws: birth budget, catastrophe budget, then per event the removal
/// amount (catastrophes at `m >= 1` only) followed by the fired stream's
/// new budget.
pub fn simulate_streams<R: Rng + ?Sized>(
    schedule: &StreamSchedule,
    horizon: f64,
    rng: &mut R,
) -> PathSample {
    let mut budget: [f64; 2] = [rng.sample(Exp1), rng.sample(Exp1)];
    let mut events = Vec::new();
    let mut state: u64 = 0;
    let mut t = 0.0;
    loop {
        let (seg_end, rates) = schedule.segment(t, horizon);
        let wait = [budget[0] / rates[0], budget[1] / rates[1]];
        let fired = if wait[0] <= wait[1] { 0 } else { 1 };
        let dt = wait[fired];
        if t + dt > seg_end {
            if seg_end >= horizon {
                break;
            }
            let span = seg_end - t;
            for k in 0..2 {
                budget[k] = (budget[k] - rates[k] * span).max(0.0);
            }
            t = seg_end;
            continue;
        }
        t += dt;
        let other = 1 - fired;
        budget[other] = (budget[other] - rates[other] * dt).max(0.0);
        let kind = if fired == 0 {
            state += 1;
            EventKind::Birth
        } else {
            if state == 0 {
                state = 1;
            } else {
                state -= rng.random_range(1..=state);
            }
            EventKind::Catastrophe
        };
        budget[fired] = rng.sample(Exp1);
        events.push(Event {
            time: t,
            kind,
            post_state: state,
        });
    }
    PathSample { events }
}
