//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiments::Overrides;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("invalid value for `{key}`: {message}")]
    Type { key: String, message: String },

    #[error("`{key}` out of range: {value} ({reason})")]
    OutOfRange { key: String, value: String, reason: String },

    #[error("missing required key `{0}`")]
    Missing(&'static str),

    #[error("cannot read {}: {message}", path.display())]
    Read { path: PathBuf, message: String },
}

/// Every key a config file may contain.
pub const KEYS: [&str; 15] = [
    "scenario",
    "particles",
    "dt",
    "t_end",
    "grid_n",
    "half_width",
    "eps",
    "sigma",
    "kappa",
    "strength",
    "seed",
    "workers",
    "out_dir",
    "emit_plots",
    "estimator",
];

/// Scenario plus overrides. Numeric fields left unset keep the preset's
/// default; `out_dir` defaults to `out`, `emit_plots` to false, `workers`
/// to the environment default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// `|M|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub emit_plots: bool,
    /// KL estimator behind the chaos verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<crate::diagnostics::KlEstimator>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn new(scenario: &str) -> Self {
        RunConfig {
            scenario: scenario.to_string(),
            particles: None,
            dt: None,
            t_end: None,
            grid_n: None,
            half_width: None,
            eps: None,
            sigma: None,
            kappa: None,
            strength: None,
            seed: None,
            workers: None,
            out_dir: default_out_dir(),
            emit_plots: false,
            estimator: None,
        }
    }

    pub fn overrides(&self) -> Overrides {
        Overrides {
            particles: self.particles,
            dt: self.dt,
            t_end: self.t_end,
            grid_n: self.grid_n,
            half_width: self.half_width,
            eps: self.eps,
            sigma: self.sigma,
            kappa: self.kappa,
            strength: self.strength,
            seed: self.seed,
            estimator: self.estimator,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(out_of_range(key, x, "must be positive and finite")),
            _ => Ok(()),
        };
        if self.scenario.trim().is_empty() {
            return Err(ConfigError::Missing("scenario"));
        }
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("half_width", self.half_width)?;
        positive("eps", self.eps)?;
        positive("kappa", self.kappa)?;
        for (key, v) in [("sigma", self.sigma), ("strength", self.strength)] {
            if let Some(x) = v {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(out_of_range(key, x, "must be nonnegative and finite"));
                }
            }
        }
        if let Some(n) = self.particles {
            if n < 2 {
                return Err(out_of_range("particles", n, "need at least 2"));
            }
        }
        if let Some(n) = self.grid_n {
            if n < 8 || !n.is_power_of_two() {
                return Err(out_of_range("grid_n", n, "must be a power of two ≥ 8"));
            }
        }
        if let Some(seed) = self.seed {
            if seed > i64::MAX as u64 {
                return Err(out_of_range("seed", seed, "TOML integers stop at 2^63 - 1"));
            }
        }
        if self.workers == Some(0) {
            return Err(out_of_range("workers", 0, "must be at least 1"));
        }
        Ok(())
    }

    /// Applies `key=value`; the value is read as a TOML value, falling back
    /// to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let mut table = toml::Table::try_from(&*self).expect("config serializes");
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 1,
            message: format!("expected key=value, got `{assignment}`"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.to_string(), line: 1 });
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
        *self = from_table(table, "")?;
        Ok(())
    }
}

fn out_of_range(key: &str, value: impl ToString, reason: &str) -> ConfigError {
    ConfigError::OutOfRange {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn from_table(table: toml::Table, text: &str) -> Result<RunConfig, ConfigError> {
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey {
            key: key.clone(),
            line: key_line(text, key),
        });
    }
    if !table.contains_key("scenario") {
        return Err(ConfigError::Missing("scenario"));
    }
    for (key, value) in &table {
        let mut single = toml::Table::new();
        single.insert("scenario".into(), toml::Value::String("x".into()));
        single.insert(key.clone(), value.clone());
        if let Err(e) = RunConfig::deserialize(single) {
            return Err(ConfigError::Type {
                key: key.clone(),
                message: e.message().to_string(),
            });
        }
    }
    let config = RunConfig::deserialize(table).map_err(|e| ConfigError::Type {
        key: String::new(),
        message: e.message().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    from_table(table, text)
}

pub fn read_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_requires_scenario() {
        assert_eq!(parse_config(""), Err(ConfigError::Missing("scenario")));
    }

    #[test]
    fn negative_dt_names_dt() {
        match parse_config("scenario = \"a\"\ndt = -0.1\n") {
            Err(ConfigError::OutOfRange { key, .. }) => assert_eq!(key, "dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_are_distinct() {
        match parse_config("scenario = \"a\"\n\ndt = = 3\n") {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config("scenario = \"a\"\n# c\nbogus = 1\n") {
            Err(ConfigError::UnknownKey { key, line }) => assert_eq!((key.as_str(), line), ("bogus", 3)),
            other => panic!("{other:?}"),
        }
        match parse_config("scenario = \"a\"\nparticles = \"many\"\n") {
            Err(ConfigError::Type { key, .. }) => assert_eq!(key, "particles"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("scenario = \"a\"\ngrid_n = 100\n"), Err(ConfigError::OutOfRange { .. })));
    }

    #[test]
    fn defaults_and_sets() {
        let mut c = parse_config("scenario = \"vortex_two_particle\"\n").unwrap();
        assert_eq!(c.out_dir, PathBuf::from("out"));
        assert!(!c.emit_plots && c.dt.is_none());
        c.set("dt=0.001").unwrap();
        c.set("out_dir = runs/a").unwrap();
        c.set("estimator=knn").unwrap();
        assert_eq!(c.dt, Some(0.001));
        assert_eq!(c.out_dir, PathBuf::from("runs/a"));
        assert_eq!(c.estimator, Some(crate::diagnostics::KlEstimator::Knn));
        assert!(matches!(c.set("nope=1"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(c.set("dt=-1"), Err(ConfigError::OutOfRange { .. })));
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
        c.seed = Some(u64::MAX);
        assert!(matches!(c.validate(), Err(ConfigError::OutOfRange { .. })));
    }
}
