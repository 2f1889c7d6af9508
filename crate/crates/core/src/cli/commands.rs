use serde::Serialize;

use super::config::{Command, RunConfig};
use super::output::{to_json, Cell, Table};
use super::CliError;
use crate::exact::{exact_xi_distribution, tail_of, TailProbability};
use crate::mc::{
    conditioned_samples, default_tilt, estimate_tail_is, estimate_tail_naive, lln_sup_fraction,
    rate_curve_sweep, sweep_seed, EstimateResult, Estimator, TiltConfig,
};
use crate::model::{scale_path, simulate, ModelParams, SimSpec, Simulator};
use crate::paths::conditioned_mean_path;
use crate::rate::{rate_i, rate_via_variational};

pub(super) fn run(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    match cfg.command {
        Command::Simulate => cmd_simulate(cfg),
        Command::Exact => cmd_exact(cfg),
        Command::Rate => cmd_rate(cfg),
        Command::Estimate => cmd_estimate(cfg),
        Command::Lln => cmd_lln(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Paths => cmd_paths(cfg),
    }
}

fn config_err(key: &str, message: &str) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn emit_table(cfg: &RunConfig, table: &Table) -> Result<Vec<u8>, CliError> {
    match cfg.choice("format", &["csv", "json"])?.as_str() {
        "csv" => Ok(table.to_csv()),
        _ => Ok(table.to_json()),
    }
}

fn positive_count(cfg: &RunConfig, key: &str) -> Result<u64, CliError> {
    let n: u64 = cfg.get(key)?;
    if n == 0 {
        return Err(config_err(key, "must be >= 1"));
    }
    Ok(n)
}

/// Default tilt for `x`, with any explicitly configured component replacing
/// the default one.
fn tilt_for(cfg: &RunConfig, x: f64, params: &ModelParams) -> Result<TiltConfig, CliError> {
    let base = default_tilt(x, params)?;
    let s = cfg.get_opt("tilt-s")?.unwrap_or(base.switch_time);
    let t1 = cfg.get_opt("tilt-theta1")?.unwrap_or(base.theta1);
    let t2 = cfg.get_opt("tilt-theta2")?.unwrap_or(base.theta2);
    Ok(TiltConfig::new(s, t1, t2)?)
}

fn estimator(cfg: &RunConfig, x: f64, params: &ModelParams) -> Result<Estimator, CliError> {
    match cfg.choice("method", &["naive", "is"])?.as_str() {
        "naive" => {
            for key in ["tilt-s", "tilt-theta1", "tilt-theta2"] {
                if cfg.is_set(key) {
                    return Err(config_err(key, "only used with method = is"));
                }
            }
            Ok(Estimator::Naive)
        }
        _ => Ok(Estimator::Is {
            tilt: tilt_for(cfg, x, params)?,
        }),
    }
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let horizon = cfg.f64_positive("T")?;
    let spec = SimSpec::new(horizon, cfg.get("seed")?, cfg.get("replica")?)?;
    let simulator = match cfg
        .choice("simulator", &["subordinated", "decomposed"])?
        .as_str()
    {
        "subordinated" => Simulator::Subordinated,
        _ => Simulator::Decomposed,
    };
    let view = cfg.choice("view", &["events", "scaled"])?;
    let grid: usize = cfg.get("grid")?;
    let path = simulate(simulator, &params, &spec);
    let table = if view == "events" {
        let mut t = Table::new(&["time", "kind", "post_state"]);
        for e in &path.events {
            t.push(vec![e.time.into(), e.kind.as_str().into(), e.post_state.into()]);
        }
        t
    } else {
        let scaled = scale_path(&path, horizon, grid)?;
        let mut t = Table::new(&["t", "value"]);
        for (g, v) in scaled.grid.iter().zip(&scaled.values) {
            t.push(vec![(*g).into(), (*v).into()]);
        }
        t
    };
    emit_table(cfg, &table)
}

#[derive(Debug, Serialize)]
struct ExactReport {
    lambda: f64,
    mu: f64,
    alpha: f64,
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "M")]
    cap: usize,
    #[serde(rename = "K")]
    max_events: usize,
    masses: Vec<f64>,
    truncation_error: f64,
    x: f64,
    tail: TailProbability,
}

fn cmd_exact(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let horizon: f64 = cfg.get("T")?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(config_err("T", "must be non-negative and finite"));
    }
    let x: f64 = cfg.get("x")?;
    let cap: usize = cfg.get("M")?;
    let max_events: usize = cfg.get("K")?;
    let budget: f64 = cfg.get("budget")?;
    if cfg.choice("format", &["json"]).is_err() {
        return Err(config_err("format", "`exact` writes json only"));
    }
    let pmf = exact_xi_distribution(&params, horizon, cap, max_events, budget)?;
    let tail = tail_of(&pmf, x, horizon.max(f64::MIN_POSITIVE));
    Ok(to_json(&ExactReport {
        lambda: params.lambda(),
        mu: params.mu(),
        alpha: params.alpha(),
        horizon,
        cap,
        max_events,
        truncation_error: pmf.truncation_error,
        masses: pmf.masses,
        x,
        tail,
    }))
}

fn cmd_rate(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let tol = cfg.f64_positive("tol")?;
    let xs = if cfg.raw("x-list").is_some() {
        cfg.f64_list("x-list")?
    } else {
        let points = positive_count(cfg, "points")?;
        (1..=points)
            .map(|i| 3.0 * params.alpha() * i as f64 / points as f64)
            .collect()
    };
    let mut table = Table::new(&[
        "x",
        "rate_closed_form",
        "rate_variational",
        "argmax_y",
        "argmax_z",
        "z_on_boundary",
    ]);
    for x in xs {
        if x <= 0.0 {
            return Err(config_err("x-list", "values must be positive"));
        }
        let sol = rate_via_variational(x, &params, tol)?;
        table.push(vec![
            x.into(),
            rate_i(x, &params).value().into(),
            sol.rate.into(),
            sol.argmax.y.into(),
            sol.argmax.z.into(),
            (sol.z_on_boundary as u64).into(),
        ]);
    }
    emit_table(cfg, &table)
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    lambda: f64,
    mu: f64,
    alpha: f64,
    #[serde(rename = "T")]
    horizon: f64,
    x: f64,
    tilt: Option<TiltConfig>,
    rate_i: Option<f64>,
    result: EstimateResult,
}

fn estimate_row(r: &EstimateResult) -> Vec<Cell> {
    vec![
        r.p_hat.into(),
        r.log_rate.into(),
        r.std_err.into(),
        r.ci95[0].into(),
        r.ci95[1].into(),
        r.n.into(),
        r.hits.into(),
        r.ess.into(),
        (r.low_ess as u64).into(),
        r.seed.into(),
    ]
}

fn cmd_estimate(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let horizon = cfg.f64_positive("T")?;
    let x: f64 = cfg.get("x")?;
    if !x.is_finite() {
        return Err(config_err("x", "must be finite"));
    }
    let n = positive_count(cfg, "n")?;
    let seed: u64 = cfg.get("seed")?;
    let format = cfg.choice("format", &["json", "csv"])?;
    let method = cfg.choice("method", &["naive", "is"])?;
    let (result, tilt) = if method == "is" && x > 0.0 {
        let Estimator::Is { tilt } = estimator(cfg, x, &params)? else {
            unreachable!("method checked above")
        };
        (estimate_tail_is(&params, horizon, x, &tilt, n, seed)?, Some(tilt))
    } else {
        // x <= 0 is certain; the default tilt is undefined there.
        estimator(cfg, x.max(f64::MIN_POSITIVE), &params)?;
        (estimate_tail_naive(&params, horizon, x, n, seed)?, None)
    };
    if format == "csv" {
        let mut t = Table::new(&[
            "p_hat", "log_rate", "std_err", "ci_low", "ci_high", "n", "hits", "ess", "low_ess",
            "seed",
        ]);
        t.push(estimate_row(&result));
        return Ok(t.to_csv());
    }
    Ok(to_json(&EstimateReport {
        lambda: params.lambda(),
        mu: params.mu(),
        alpha: params.alpha(),
        horizon,
        x,
        tilt,
        rate_i: rate_i(x, &params).finite(),
        result,
    }))
}

fn cmd_lln(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let horizons = cfg.f64_list("T-list")?;
    let eps = cfg.f64_positive("eps")?;
    let n = positive_count(cfg, "n")?;
    let seed: u64 = cfg.get("seed")?;
    cfg.choice("format", &["csv", "json"])?;
    let mut table = Table::new(&["T", "fraction", "std_err", "ci_low", "ci_high", "hits", "n"]);
    for horizon in horizons {
        let r = lln_sup_fraction(&params, horizon, eps, n, sweep_seed(seed, horizon))?;
        table.push(vec![
            horizon.into(),
            r.p_hat.into(),
            r.std_err.into(),
            r.ci95[0].into(),
            r.ci95[1].into(),
            r.hits.into(),
            r.n.into(),
        ]);
    }
    emit_table(cfg, &table)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let x = cfg.f64_positive("x")?;
    let horizons = cfg.f64_list("T-list")?;
    let n = positive_count(cfg, "n")?;
    let seed: u64 = cfg.get("seed")?;
    let est = estimator(cfg, x, &params)?;
    cfg.choice("format", &["csv", "json"])?;
    let target = rate_i(x, &params).value();
    let mut table = Table::new(&[
        "T", "p_hat", "log_rate", "std_err", "ci_low", "ci_high", "ess", "rate_i", "status",
    ]);
    for point in rate_curve_sweep(&params, x, &horizons, &est, n, seed) {
        let row = match &point.result {
            Ok(r) => vec![
                point.horizon.into(),
                r.p_hat.into(),
                r.log_rate.into(),
                r.std_err.into(),
                r.ci95[0].into(),
                r.ci95[1].into(),
                r.ess.into(),
                target.into(),
                if r.hits == 0 { "no_hits" } else { "ok" }.into(),
            ],
            Err(e) => {
                let mut row = vec![point.horizon.into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.push(target.into());
                row.push(Cell::Text(e.to_string()));
                row
            }
        };
        table.push(row);
    }
    emit_table(cfg, &table)
}

fn cmd_paths(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let horizon = cfg.f64_positive("T")?;
    let x = cfg.f64_positive("x")?;
    let n = positive_count(cfg, "n")?;
    let grid = positive_count(cfg, "grid")? as usize;
    let seed: u64 = cfg.get("seed")?;
    let tilt = tilt_for(cfg, x, &params)?;
    cfg.choice("format", &["csv", "json"])?;
    let samples = conditioned_samples(&params, horizon, x, &tilt, n, seed, grid)?;
    let mean = conditioned_mean_path(&samples, grid)?;
    let optimal = crate::model::optimal_path(x, &params)?;
    let mut table = Table::new(&["t", "mean_path", "optimal_path", "abs_diff"]);
    for (&t, &v) in mean.grid.iter().zip(&mean.mean_values) {
        let o = optimal.value_at(t);
        table.push(vec![t.into(), v.into(), o.into(), (v - o).abs().into()]);
    }
    emit_table(cfg, &table)
}
