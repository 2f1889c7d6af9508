use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::CliError;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Exact,
    Rate,
    Estimate,
    Lln,
    Sweep,
    Paths,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Exact => "exact",
            Command::Rate => "rate",
            Command::Estimate => "estimate",
            Command::Lln => "lln",
            Command::Sweep => "sweep",
            Command::Paths => "paths",
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["T", "replica", "view", "grid", "simulator"],
            Command::Exact => &["T", "x", "M", "K", "budget"],
            Command::Rate => &["x-list", "points", "tol"],
            Command::Estimate => &["T", "x", "n", "method", "tilt-s", "tilt-theta1", "tilt-theta2"],
            Command::Lln => &["T-list", "eps", "n"],
            Command::Sweep => &["x", "T-list", "n", "method", "tilt-s", "tilt-theta1", "tilt-theta2"],
            Command::Paths => &["T", "x", "n", "grid", "tilt-s", "tilt-theta1", "tilt-theta2"],
        }
    }

    fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::Simulate => &[
                ("T", "10"),
                ("replica", "0"),
                ("view", "events"),
                ("grid", "100"),
                ("simulator", "subordinated"),
                ("format", "csv"),
            ],
            Command::Exact => &[
                ("T", "4"),
                ("x", "0.5"),
                ("M", "64"),
                ("K", "60"),
                ("budget", "1e-12"),
                ("format", "json"),
            ],
            Command::Rate => &[("points", "50"), ("tol", "1e-6"), ("format", "csv")],
            Command::Estimate => &[
                ("T", "4"),
                ("x", "0.5"),
                ("n", "10000"),
                ("method", "naive"),
                ("format", "json"),
            ],
            Command::Lln => &[
                ("T-list", "25,50,100,200"),
                ("eps", "0.2"),
                ("n", "10000"),
                ("format", "csv"),
            ],
            Command::Sweep => &[
                ("x", "0.5"),
                ("T-list", "40,80,160"),
                ("n", "10000"),
                ("method", "is"),
                ("format", "csv"),
            ],
            Command::Paths => &[
                ("T", "160"),
                ("x", "0.5"),
                ("n", "100000"),
                ("grid", "100"),
                ("format", "csv"),
            ],
        }
    }

    fn allows(&self, key: &str) -> bool {
        COMMON_KEYS.contains(&key) || self.keys().contains(&key)
    }
}

const COMMON_KEYS: &[&str] = &["lambda", "mu", "alpha", "seed", "out", "format", "workers"];

const COMMON_DEFAULTS: &[(&str, &str)] = &[
    ("lambda", "1"),
    ("mu", "1"),
    ("alpha", "1"),
    ("seed", "1"),
    ("workers", "0"),
];

/// Every key any subcommand understands.
pub const ALL_KEYS: &[&str] = &[
    "lambda", "mu", "alpha", "seed", "out", "format", "workers", "T", "x", "eps", "n", "method",
    "tilt-s", "tilt-theta1", "tilt-theta2", "grid", "M", "K", "T-list", "x-list", "points", "tol",
    "budget", "replica", "view", "simulator",
];

/// Resolved `key -> value` configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
    explicit: Vec<String>,
}

fn config_err(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_err(
                "config",
                format!("line {}: expected `key = value`", lineno + 1),
            ));
        };
        let key = k.trim();
        if !ALL_KEYS.contains(&key) {
            return Err(config_err(key, "unknown key"));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Merges flags over file entries over defaults and rejects keys the
    /// command does not use.
    pub fn resolve(
        command: Command,
        flags: Vec<(&'static str, String)>,
        config_file: Option<&Path>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = COMMON_DEFAULTS
            .iter()
            .chain(command.defaults())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut explicit = Vec::new();
        let mut layer = |key: String, value: String| -> Result<(), CliError> {
            if !command.allows(&key) {
                return Err(config_err(
                    &key,
                    format!("not used by `{}`", command.name()),
                ));
            }
            if !explicit.contains(&key) {
                explicit.push(key.clone());
            }
            values.insert(key, value);
            Ok(())
        };
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err("config", format!("{}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                layer(k, v)?;
            }
        }
        for (k, v) in flags {
            layer(k.to_string(), v)?;
        }
        Ok(Self {
            command,
            values,
            explicit,
        })
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self
            .raw(key)
            .ok_or_else(|| config_err(key, "missing value"))?;
        raw.parse()
            .map_err(|_| config_err(key, format!("cannot parse `{raw}`")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    pub fn f64_positive(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.get(key)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(config_err(key, "must be positive and finite"));
        }
        Ok(v)
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self
            .raw(key)
            .ok_or_else(|| config_err(key, "missing value"))?;
        let list: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse()).collect();
        match list {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
            _ => Err(config_err(key, format!("expected comma-separated numbers, got `{raw}`"))),
        }
    }

    pub fn choice(&self, key: &str, options: &[&str]) -> Result<String, CliError> {
        let v: String = self.get(key)?;
        if options.contains(&v.as_str()) {
            Ok(v)
        } else {
            Err(config_err(key, format!("expected one of {}", options.join("|"))))
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let lambda = self.f64_positive("lambda")?;
        let mu = self.f64_positive("mu")?;
        let alpha = self.f64_positive("alpha")?;
        ModelParams::new(lambda, mu, alpha).map_err(CliError::from)
    }
}
