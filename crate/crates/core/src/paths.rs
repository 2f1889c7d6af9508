//! Conditioned mean trajectories and their distance to the optimal path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OptimalPath, ScaledPath};

/// Default number of grid intervals on `[0, 1]`.
pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSample {
    pub path: ScaledPath,
    pub weight: f64,
    /// Whether the path belongs to the conditioning event.
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPath {
    pub grid: Vec<f64>,
    pub mean_values: Vec<f64>,
    pub total_weight: f64,
}

/// Weighted pointwise mean of the paths with `hit` set.
pub fn conditioned_mean_path(samples: &[ConditioningSample], grid_size: usize) -> Result<MeanPath> {
    let points = grid_size + 1;
    let mut sums = vec![0.0; points];
    let mut total_weight = 0.0;
    let mut grid = None;
    for s in samples.iter().filter(|s| s.hit && s.weight > 0.0) {
        if s.path.values.len() != points {
            return Err(Error::GridMismatch {
                expected: points,
                got: s.path.values.len(),
            });
        }
        for (acc, v) in sums.iter_mut().zip(&s.path.values) {
            *acc += s.weight * v;
        }
        total_weight += s.weight;
        grid.get_or_insert_with(|| s.path.grid.clone());
    }
    let grid = grid.ok_or(Error::NoQualifyingSamples)?;
    Ok(MeanPath {
        grid,
        mean_values: sums.into_iter().map(|s| s / total_weight).collect(),
        total_weight,
    })
}

/// Largest absolute gap between the mean path and the optimal path on the
/// mean path's grid.
pub fn path_distance(mean: &MeanPath, optimal: &OptimalPath) -> f64 {
    mean.grid
        .iter()
        .zip(&mean.mean_values)
        .map(|(&t, &v)| (v - optimal.value_at(t)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(values: Vec<f64>, weight: f64, hit: bool) -> ConditioningSample {
        let m = values.len() - 1;
        ConditioningSample {
            path: ScaledPath {
                grid: (0..=m).map(|j| j as f64 / m as f64).collect(),
                values,
            },
            weight,
            hit,
        }
    }

    fn line() -> OptimalPath {
        OptimalPath {
            breakpoint: 0.5,
            slope: 1.0,
            terminal: 0.5,
        }
    }

    #[test]
    fn single_sample_is_itself() {
        let s = sample(vec![0.0, 0.2, 0.7], 0.3, true);
        let m = conditioned_mean_path(std::slice::from_ref(&s), 2).unwrap();
        assert_eq!(m.mean_values, s.path.values);
        assert_eq!(m.total_weight, 0.3);
    }

    #[test]
    fn midpoint_of_two() {
        let a = sample(vec![0.0, 0.2, 0.6], 1.0, true);
        let b = sample(vec![0.0, 0.4, 1.0], 1.0, true);
        let c = sample(vec![9.0, 9.0, 9.0], 1.0, false);
        let m = conditioned_mean_path(&[a, b, c], 2).unwrap();
        for (v, e) in m.mean_values.iter().zip([0.0, 0.3, 0.8]) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn fails_without_hits() {
        let a = sample(vec![0.0, 0.1, 0.2], 1.0, false);
        assert_eq!(
            conditioned_mean_path(&[a], 2).unwrap_err(),
            Error::NoQualifyingSamples
        );
        let z = sample(vec![0.0, 0.1, 0.2], 0.0, true);
        assert!(conditioned_mean_path(&[z], 2).is_err());
        let bad = sample(vec![0.0, 0.1], 1.0, true);
        assert!(matches!(
            conditioned_mean_path(&[bad], 2),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn distance_identity_and_offset() {
        let grid: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let exact: Vec<f64> = grid.iter().map(|&t| line().value_at(t)).collect();
        let mean = MeanPath {
            grid: grid.clone(),
            mean_values: exact.clone(),
            total_weight: 1.0,
        };
        assert_eq!(path_distance(&mean, &line()), 0.0);
        let shifted = MeanPath {
            mean_values: exact.iter().map(|v| v + 0.07).collect(),
            ..mean.clone()
        };
        assert!((path_distance(&shifted, &line()) - 0.07).abs() < 1e-15);
        let lowered = MeanPath {
            mean_values: exact.iter().map(|v| v - 0.07).collect(),
            ..mean
        };
        assert!(
            (path_distance(&lowered, &line()) - path_distance(&shifted, &line())).abs() < 1e-15
        );
    }
}
