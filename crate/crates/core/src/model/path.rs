use serde::{Deserialize, Serialize};

use super::{ModelParams, PathSample};
use crate::error::{Error, Result};

/// `xi(T t) / T` sampled on `m + 1` equally spaced points of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Samples the scaled path with right-continuous steps: an event at exactly
/// `T t_j` is counted at `t_j`.
pub fn scale_path(path: &PathSample, horizon: f64, grid_size: usize) -> Result<ScaledPath> {
    if grid_size == 0 {
        return Err(Error::invalid("grid", 0.0, "must be >= 1"));
    }
    let grid: Vec<f64> = (0..=grid_size)
        .map(|j| j as f64 / grid_size as f64)
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut idx = 0;
    let mut state = 0;
    for (j, &t) in grid.iter().enumerate() {
        if j > 0 {
            let cut = horizon * t;
            while idx < path.events.len() && path.events[idx].time <= cut {
                state = path.events[idx].post_state;
                idx += 1;
            }
        }
        values.push(state as f64 / horizon);
    }
    Ok(ScaledPath { grid, values })
}

pub fn terminal_value(path: &PathSample, horizon: f64) -> f64 {
    path.terminal_state() as f64 / horizon
}

pub fn sup_value(path: &PathSample, horizon: f64) -> f64 {
    path.max_state() as f64 / horizon
}

/// Most probable route to `xi_T(1) = x`: zero up to `breakpoint`, then a
/// straight line reaching `terminal` at `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalPath {
    pub breakpoint: f64,
    pub slope: f64,
    pub terminal: f64,
}

impl OptimalPath {
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.breakpoint {
            0.0
        } else {
            (self.terminal - self.slope * (1.0 - t)).max(0.0)
        }
    }
}

/// For `x < alpha` the path idles at zero until `1 - x/alpha` and then
/// climbs with slope `alpha`; otherwise it is the line of slope `x` from
/// the origin.
pub fn optimal_path(x: f64, params: &ModelParams) -> Result<OptimalPath> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid("x", x, "must be positive"));
    }
    let alpha = params.alpha();
    Ok(if x < alpha {
        OptimalPath {
            breakpoint: 1.0 - x / alpha,
            slope: alpha,
            terminal: x,
        }
    } else {
        OptimalPath {
            breakpoint: 0.0,
            slope: x,
            terminal: x,
        }
    })
}
