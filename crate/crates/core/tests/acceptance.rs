//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use catastrophe_ldp::exact::{
    exact_tail, exact_xi_distribution, poisson_lower_tail_exact, uniform_sum_tail_exact,
};
use catastrophe_ldp::mc::{
    conditioned_samples, default_tilt, empirical_terminal_law, estimate_tail_is,
    lln_sup_fraction, rate_curve_sweep, Estimator,
};
use catastrophe_ldp::model::{optimal_path, Simulator};
use catastrophe_ldp::paths::{conditioned_mean_path, path_distance, DEFAULT_GRID};
use catastrophe_ldp::rate::{
    nu2_lower_tail_bound, rate_i, rate_i1, rate_via_variational, uniform_sum_bound, BoundQuery,
};
use catastrophe_ldp::ModelParams;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(l: f64, m: f64, a: f64) -> ModelParams {
    ModelParams::new(l, m, a).unwrap()
}

fn unit() -> ModelParams {
    params(1.0, 1.0, 1.0)
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn variational_identity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in [params(1.0, 1.0, 1.0), params(2.0, 3.0, 1.5), params(0.5, 2.0, 3.0)] {
        let alpha = p.alpha();
        for i in 1..=50 {
            let x = 3.0 * alpha * i as f64 / 50.0;
            let sol = rate_via_variational(x, &p, 1e-9).unwrap();
            let exact = rate_i(x, &p).value();
            worst = worst.max((sol.rate - exact).abs());
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-6 && within(elapsed, 5),
        detail: format!("max |gap| = {worst:.3e}, {:.2?}", elapsed),
    }
}

fn rate_regularity() -> Outcome {
    let mut violations = 0usize;
    let mut max_gap: f64 = 0.0;
    let mut zero_ok = true;
    for p in [params(1.0, 1.0, 1.0), params(2.0, 3.0, 1.5), params(0.5, 2.0, 3.0)] {
        let alpha = p.alpha();
        let left = rate_i(alpha.next_down(), &p).value();
        max_gap = max_gap.max((left - rate_i(alpha, &p).value()).abs());
        zero_ok &= rate_i(0.0, &p).value() == 0.0;

        let n = 1000;
        let values: Vec<f64> = (0..n)
            .map(|i| rate_i(3.0 * alpha * i as f64 / (n - 1) as f64, &p).value())
            .collect();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // second differences of an exactly linear segment are only zero up to
        // the rounding of three evaluations
        let slack = 8.0 * f64::EPSILON * scale;
        for w in values.windows(2) {
            if w[1] < w[0] {
                violations += 1;
            }
        }
        for w in values.windows(3) {
            if w[2] - 2.0 * w[1] + w[0] < -slack {
                violations += 1;
            }
        }
    }
    Outcome {
        pass: max_gap <= 1e-12 && violations == 0 && zero_ok,
        detail: format!("gap at alpha = {max_gap:.3e}, violations = {violations}, I(0) = 0: {zero_ok}"),
    }
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum::<f64>()
}

fn simulators_vs_exact() -> Outcome {
    let start = Instant::now();
    let p = unit();
    let pmf = exact_xi_distribution(&p, 4.0, 64, 60, 1e-9).unwrap();
    let n = 1_000_000;
    let sub = empirical_terminal_law(Simulator::Subordinated, &p, 4.0, n, 11).unwrap();
    let dec = empirical_terminal_law(Simulator::Decomposed, &p, 4.0, n, 12).unwrap();
    let tv_sub = total_variation(&sub, &pmf.masses) + pmf.truncation_error;
    let tv_dec = total_variation(&dec, &pmf.masses) + pmf.truncation_error;
    let tv_between = total_variation(&sub, &dec);
    let elapsed = start.elapsed();
    Outcome {
        pass: tv_sub <= 0.01 && tv_dec <= 0.01 && tv_between <= 0.01 && within(elapsed, 120),
        detail: format!(
            "TV(sub, exact) = {tv_sub:.4}, TV(dec, exact) = {tv_dec:.4}, TV(sub, dec) = {tv_between:.4}, {:.2?}",
            elapsed
        ),
    }
}

fn bound_domination() -> Outcome {
    let mut checked = 0usize;
    let mut violations = 0usize;
    for p in [params(1.0, 1.0, 1.0), params(2.0, 3.0, 1.5)] {
        for delta in [0.0, 0.5] {
            for horizon in [10.0, 50.0] {
                for k in 1..=19 {
                    let c = 0.05 * k as f64;
                    let q = BoundQuery {
                        count_fraction: c,
                        start_fraction: delta,
                        horizon,
                        level: 1.0,
                        sum_fraction: 0.0,
                    };
                    let mean = p.catastrophe_rate() * (1.0 - delta) * horizon;
                    let exact = poisson_lower_tail_exact(mean, q.count()).unwrap();
                    let bound = nu2_lower_tail_bound(&q, &p).unwrap();
                    checked += 1;
                    if exact > bound * (1.0 + 1e-12) {
                        violations += 1;
                    }
                }
            }
        }
    }
    let horizon = 50.0;
    let mut floors_ok = true;
    for m in [5u64, 20] {
        for n in [3u64, 10] {
            for k in 1..=10 {
                let a = 0.5 * (m * n) as f64 * 0.2 * k as f64 / horizon;
                let q = BoundQuery {
                    count_fraction: n as f64 / horizon,
                    start_fraction: 0.0,
                    horizon,
                    level: m as f64 / horizon,
                    sum_fraction: a,
                };
                floors_ok &= q.range() == m && q.count() == n;
                let exact = uniform_sum_tail_exact(m, n, a * horizon).unwrap();
                let bound = uniform_sum_bound(&q).unwrap();
                checked += 1;
                if exact > bound * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        pass: violations == 0 && floors_ok,
        detail: format!("{checked} cases, {violations} violations, floors as intended: {floors_ok}"),
    }
}

/// Maximises `x y - m (e^y - 1)` by golden-section search on a bracket that
/// contains the stationary point.
fn legendre_numeric(x: f64, m: f64) -> f64 {
    let g = |y: f64| x * y - m * y.exp_m1();
    let (mut a, mut b) = (-40.0f64, 40.0f64);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-13 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    g(0.5 * (a + b))
}

fn legendre_consistency() -> Outcome {
    let p = params(2.0, 3.0, 1.5);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for x in [0.05, 0.3, 0.6, 1.2, 2.5] {
        for delta in [0.0, 0.25, 0.5, 0.9] {
            let m = p.birth_rate() * (1.0 - delta);
            let closed = rate_i1(x, delta, &p).unwrap().value();
            worst = worst.max((legendre_numeric(x, m) - closed).abs());
            count += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-8 && count == 20,
        detail: format!("{count} pairs, max |gap| = {worst:.3e}"),
    }
}

fn lln_decay() -> Outcome {
    let p = unit();
    let fractions: Vec<f64> = [25.0, 50.0, 100.0, 200.0]
        .iter()
        .map(|&t| lln_sup_fraction(&p, t, 0.2, 10_000, 6).unwrap().p_hat)
        .collect();
    let monotone = fractions.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        pass: monotone && fractions[3] < 0.01,
        detail: format!("fractions {fractions:?}"),
    }
}

fn rate_convergence() -> Outcome {
    let start = Instant::now();
    let p = unit();
    let horizons = [40.0, 80.0, 160.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for (x, lo, hi) in [(0.5, 0.24, 0.52), (2.0, 1.33, 2.22)] {
        let target = rate_i(x, &p).value();
        let est = Estimator::Is {
            tilt: default_tilt(x, &p).unwrap(),
        };
        let rates: Vec<f64> = rate_curve_sweep(&p, x, &horizons, &est, 100_000, 7)
            .into_iter()
            .map(|pt| pt.result.ok().and_then(|r| r.log_rate).unwrap_or(f64::NAN))
            .collect();
        let errs: Vec<f64> = rates.iter().map(|r| (r - target).abs()).collect();
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        let in_range = (lo..=hi).contains(&rates[2]);
        pass &= decreasing && in_range;
        detail.push(format!("x={x}: log_rate {rates:.4?} vs I={target:.5}"));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 600);
    detail.push(format!("{:.2?}", elapsed));
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn path_recovery() -> Outcome {
    let p = unit();
    let x = 0.5;
    let tilt = default_tilt(x, &p).unwrap();
    let optimal = optimal_path(x, &p).unwrap();
    let distance = |horizon: f64| {
        let samples = conditioned_samples(&p, horizon, x, &tilt, 100_000, 8, DEFAULT_GRID).unwrap();
        let mean = conditioned_mean_path(&samples, DEFAULT_GRID).unwrap();
        path_distance(&mean, &optimal)
    };
    let (d40, d160) = (distance(40.0), distance(160.0));
    Outcome {
        pass: d160 <= 0.1 && d160 < d40,
        detail: format!("L-inf distance T=40: {d40:.4}, T=160: {d160:.4}"),
    }
}

fn cli_output(args: &[&str], workers: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_catldp"))
        .args(args)
        .args(["--workers", workers])
        .output()
        .expect("run catldp");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn unbiased_and_reproducible() -> Outcome {
    let p = unit();
    let (horizon, x) = (4.0, 0.5);
    let exact = exact_tail(&p, horizon, x, 64, 60, 1e-9).unwrap();
    let tilt = default_tilt(x, &p).unwrap();
    let agree = (0..100u64)
        .filter(|&seed| {
            let r = estimate_tail_is(&p, horizon, x, &tilt, 20_000, 1000 + seed).unwrap();
            (r.p_hat - exact.probability).abs() <= 3.0 * r.std_err + exact.error
        })
        .count();

    let commands: [&[&str]; 7] = [
        &["simulate", "--T", "20", "--seed", "3"],
        &["exact", "--T", "4"],
        &["rate", "--points", "10"],
        &["estimate", "--method", "is", "--n", "5000", "--seed", "9"],
        &["lln", "--n", "500", "--T-list", "10,20"],
        &["sweep", "--n", "2000", "--T-list", "10,20"],
        &["paths", "--n", "5000", "--T", "40", "--grid", "20"],
    ];
    let mut identical = 0;
    for args in commands {
        let one = cli_output(args, "1");
        if one == cli_output(args, "3") && one == cli_output(args, "1") {
            identical += 1;
        }
    }
    Outcome {
        pass: agree >= 95 && identical == commands.len(),
        detail: format!(
            "{agree}/100 runs within 3 s.e. of {:.6e}; {identical}/{} commands byte-identical across worker counts",
            exact.probability,
            commands.len()
        ),
    }
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("variational identity", variational_identity),
        ("rate-function regularity", rate_regularity),
        ("simulators vs exact oracle", simulators_vs_exact),
        ("bound domination", bound_domination),
        ("Legendre consistency", legendre_consistency),
        ("LLN decay", lln_decay),
        ("LDP rate convergence", rate_convergence),
        ("optimal-path recovery", path_recovery),
        ("unbiasedness and reproducibility", unbiased_and_reproducible),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag}: {name}: {}", i + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
