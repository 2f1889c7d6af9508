//! The `catldp` command-line interface.
//!
//! Every key can come from a flat `key = value` config file (`--config`) or
//! from a flag of the same name; flags win over the file, the file over
//! built-in defaults. Failures print one JSON error record on stderr and
//! exit with 2 (configuration), 3 (numerical) or 4 (statistical).

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use config::{Command, RunConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("statistical failure: {0}")]
    Statistical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Statistical(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Statistical(_) => "statistical",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            kind: &'a str,
            key: Option<&'a str>,
            exit_code: i32,
            message: String,
        }
        let key = match self {
            CliError::Config { key, .. } => Some(key.as_str()),
            _ => None,
        };
        let rec = Record {
            kind: self.kind(),
            key,
            exit_code: self.exit_code(),
            message: self.to_string(),
        };
        serde_json::json!({ "error": rec }).to_string()
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        use crate::Error;
        match e {
            Error::InvalidParameter { name, .. } => CliError::Config {
                key: name.to_string(),
                message: e.to_string(),
            },
            Error::TruncationBudget { .. }
            | Error::OptimizerBudget { .. }
            | Error::GridMismatch { .. } => CliError::Numerical(e.to_string()),
            Error::NoQualifyingSamples => CliError::Statistical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "catldp", version, about = "Population dynamics with uniform catastrophes")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Dump one sample path (events or scaled grid).
    Simulate(Flags),
    /// Exact truncated law of xi(T) and the tail P(xi(T) >= xT).
    Exact(Flags),
    /// Closed-form and variational rate function over an x-grid.
    Rate(Flags),
    /// Estimate P(xi_T(1) >= x) naively or by importance sampling.
    Estimate(Flags),
    /// Fraction of paths with sup xi_T > eps over a list of horizons.
    Lln(Flags),
    /// -ln(p)/T over a list of horizons.
    Sweep(Flags),
    /// Conditioned mean path against the optimal path.
    Paths(Flags),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 = all cores). Never changes the output.
    #[arg(long)]
    workers: Option<String>,
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// naive | is
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "tilt-s")]
    tilt_s: Option<String>,
    #[arg(long = "tilt-theta1")]
    tilt_theta1: Option<String>,
    #[arg(long = "tilt-theta2")]
    tilt_theta2: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "M")]
    cap: Option<String>,
    #[arg(long = "K")]
    max_events: Option<String>,
    #[arg(long = "T-list")]
    t_list: Option<String>,
    #[arg(long = "x-list")]
    x_list: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Maximum accepted truncation error of the exact oracle.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    replica: Option<String>,
    /// events | scaled
    #[arg(long)]
    view: Option<String>,
    /// subordinated | decomposed
    #[arg(long)]
    simulator: Option<String>,
}

impl Flags {
    fn pairs(self) -> (Option<PathBuf>, Vec<(&'static str, String)>) {
        let all = [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("seed", self.seed),
            ("out", self.out),
            ("format", self.format),
            ("workers", self.workers),
            ("T", self.horizon),
            ("x", self.x),
            ("eps", self.eps),
            ("n", self.n),
            ("method", self.method),
            ("tilt-s", self.tilt_s),
            ("tilt-theta1", self.tilt_theta1),
            ("tilt-theta2", self.tilt_theta2),
            ("grid", self.grid),
            ("M", self.cap),
            ("K", self.max_events),
            ("T-list", self.t_list),
            ("x-list", self.x_list),
            ("points", self.points),
            ("tol", self.tol),
            ("budget", self.budget),
            ("replica", self.replica),
            ("view", self.view),
            ("simulator", self.simulator),
        ];
        let set = all
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect();
        (self.config, set)
    }
}

/// Parses arguments into a validated configuration.
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config {
        key: e
            .get(clap::error::ContextKind::InvalidArg)
            .map(|a| a.to_string().trim_start_matches('-').to_string())
            .unwrap_or_else(|| "args".to_string()),
        message: e.to_string().trim().to_string(),
    })?;
    let (command, flags) = match cli.command {
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Exact(f) => (Command::Exact, f),
        Sub::Rate(f) => (Command::Rate, f),
        Sub::Estimate(f) => (Command::Estimate, f),
        Sub::Lln(f) => (Command::Lln, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::Paths(f) => (Command::Paths, f),
    };
    let (file, pairs) = flags.pairs();
    RunConfig::resolve(command, pairs, file.as_deref())
}

/// Runs a resolved configuration and returns the bytes of its output.
pub fn execute(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let workers: usize = config.get("workers")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    pool.install(|| commands::run(config))
}

/// Executes and writes to `--out` or stdout.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = parse_args(args)?;
    let bytes = execute(&config)?;
    match config.raw("out") {
        Some(path) if path != "-" => {
            std::fs::write(path, &bytes).map_err(|e| CliError::Io(format!("{path}: {e}")))
        }
        _ => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<T> = args.into_iter().collect();
    // Let clap handle --help / --version itself.
    if let Err(e) = Cli::try_parse_from(args.clone()) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = e.print();
            return 0;
        }
    }
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
