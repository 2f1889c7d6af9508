use serde::{Deserialize, Serialize};

use super::xlogx;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Maximum number of objective evaluations per optimisation.
pub const EVALUATION_BUDGET: usize = 10_000;

const GRID_POINTS: usize = 30;
const Z_FLOOR: f64 = 1e-12;
const MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalPoint {
    pub y: f64,
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalSolution {
    /// `-sup f`, the rate recovered from the optimisation.
    pub rate: f64,
    pub argmax: VariationalPoint,
    pub evaluations: usize,
    /// True when the maximiser sits on the closed end `z = 1`.
    pub z_on_boundary: bool,
}

/// `f(y, z) = -y ln(y (lambda+mu) / (alpha lambda z)) + y - alpha z`, with
/// `f(0, z) = -alpha z`.
pub fn variational_f(y: f64, z: f64, params: &ModelParams) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::invalid("z", z, "must be positive"));
    }
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::invalid("y", y, "must be non-negative"));
    }
    Ok(objective(y, z, params))
}

fn objective(y: f64, z: f64, params: &ModelParams) -> f64 {
    let k = (params.lambda() + params.mu()) / (params.alpha() * params.lambda() * z);
    -xlogx(y, k) + y - params.alpha() * z
}

struct Counted<'a> {
    params: &'a ModelParams,
    evaluations: usize,
}

impl Counted<'_> {
    fn eval(&mut self, y: f64, z: f64) -> Result<f64> {
        if self.evaluations >= EVALUATION_BUDGET {
            return Err(Error::OptimizerBudget {
                evaluations: self.evaluations,
            });
        }
        self.evaluations += 1;
        Ok(objective(y, z, self.params))
    }
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
/// The endpoints are evaluated too so a boundary maximum is returned exactly.
fn golden_max<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for end in [lo, hi] {
        let v = f(end)?;
        if v >= best.1 {
            best = (end, v);
        }
    }
    Ok(best)
}

/// Recovers `I(x)` as `-sup_{z in (0,1]} sup_{y >= x} f(y, z)`.
///
/// A log-spaced grid seeds coordinate-wise golden-section ascent; `f` is
/// jointly concave so the alternation converges to the global maximum.
/// The `z` range is closed at 1 because for `x >= alpha` the supremum is
/// attained there.
pub fn rate_via_variational(
    x: f64,
    params: &ModelParams,
    tol: f64,
) -> Result<VariationalSolution> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid("x", x, "must be positive"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tol", tol, "must be positive"));
    }
    let mut f = Counted {
        params,
        evaluations: 0,
    };
    let y_hi = 2.0 * x.max(params.alpha()) + 1.0;
    let z_lo_grid: f64 = 1e-6;
    let line_tol = (tol * 1e-3).max(1e-12);

    let mut best = (x, 1.0, f64::NEG_INFINITY);
    for i in 0..GRID_POINTS {
        let s = i as f64 / (GRID_POINTS - 1) as f64;
        let y = x * (y_hi / x).powf(s);
        for j in 0..GRID_POINTS {
            let t = j as f64 / (GRID_POINTS - 1) as f64;
            let z = z_lo_grid.powf(1.0 - t);
            let v = f.eval(y, z)?;
            if v > best.2 {
                best = (y, z, v);
            }
        }
    }

    let (mut y, mut z, mut value) = best;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let (z_new, _) = golden_max(|zz| f.eval(y, zz), Z_FLOOR, 1.0, line_tol)?;
        let (y_new, v_new) = golden_max(|yy| f.eval(yy, z_new), x, y_hi, line_tol)?;
        let moved = (y_new - y).abs().max((z_new - z).abs());
        let gain = v_new - value;
        y = y_new;
        z = z_new;
        value = value.max(v_new);
        if moved <= tol * 1e-1 && gain.abs() <= tol * 1e-3 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::OptimizerBudget {
            evaluations: f.evaluations,
        });
    }
    let value = objective(y, z, params);
    Ok(VariationalSolution {
        rate: -value,
        argmax: VariationalPoint { y, z, value },
        evaluations: f.evaluations,
        z_on_boundary: z == 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::rate_i;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn objective_examples() {
        assert_eq!(variational_f(0.0, 0.5, &unit()).unwrap(), -0.5);
        let v = variational_f(0.5, 0.5, &unit()).unwrap();
        assert!((v + 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((v + 0.34657359027997264).abs() < 1e-15);
        assert!(variational_f(1.0, 0.0, &unit()).is_err());
        assert!(variational_f(1.0, -0.5, &unit()).is_err());
        assert!(variational_f(-1.0, 0.5, &unit()).is_err());
    }

    #[test]
    fn objective_concave_in_y() {
        let params = ModelParams::new(2.0, 3.0, 1.5).unwrap();
        let h = 1e-3;
        for z in [0.05, 0.3, 0.7, 1.0] {
            for i in 1..2000 {
                let y = i as f64 * h;
                let d2 = objective(y + h, z, &params) - 2.0 * objective(y, z, &params)
                    + objective(y - h, z, &params);
                assert!(d2 < 0.0, "y={y} z={z} d2={d2}");
            }
        }
    }

    #[test]
    fn recovers_below_alpha() {
        let s = rate_via_variational(0.5, &unit(), 1e-6).unwrap();
        assert!((s.rate - 0.5 * 2f64.ln()).abs() < 1e-6);
        assert!((s.argmax.y - 0.5).abs() < 1e-6);
        assert!((s.argmax.z - 0.5).abs() < 1e-6);
        assert!(!s.z_on_boundary);
        assert!(s.evaluations <= EVALUATION_BUDGET);
    }

    #[test]
    fn recovers_above_alpha_on_boundary() {
        let s = rate_via_variational(2.0, &unit(), 1e-6).unwrap();
        assert!((s.rate - (2.0 * 4f64.ln() - 1.0)).abs() < 1e-6);
        assert!((s.argmax.y - 2.0).abs() < 1e-6);
        assert_eq!(s.argmax.z, 1.0);
        assert!(s.z_on_boundary);
    }

    #[test]
    fn matches_closed_form_on_grid() {
        for params in [
            unit(),
            ModelParams::new(2.0, 3.0, 1.5).unwrap(),
            ModelParams::new(0.5, 4.0, 0.7).unwrap(),
        ] {
            for i in 1..=50 {
                let x = 3.0 * params.alpha() * i as f64 / 50.0;
                let s = rate_via_variational(x, &params, 1e-6).unwrap();
                let exact = rate_i(x, &params).value();
                assert!((s.rate - exact).abs() <= 1e-6, "x={x}: {} vs {exact}", s.rate);
                let z_star = (x / params.alpha()).min(1.0);
                assert!((s.argmax.z - z_star).abs() <= 1e-6, "x={x}");
                assert!((s.argmax.y - x).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_via_variational(0.0, &unit(), 1e-6).is_err());
        assert!(rate_via_variational(1.0, &unit(), 0.0).is_err());
    }

    #[test]
    fn golden_finds_interior_and_boundary() {
        let (x, _) = golden_max(|t| Ok(-(t - 0.3) * (t - 0.3)), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        let (x, _) = golden_max(Ok, 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(x, 1.0);
    }
}
