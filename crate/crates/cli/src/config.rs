//! Experiment configuration: a flat TOML file with one `[sweep]` table.
//!
//! Every key is optional; an empty file yields the desk-scale defaults
//! (10 GHz, 16-antenna BS, 5×8 surface, four 4-antenna users, −110 dBm noise,
//! 16 scatterers). Unknown keys are rejected by name.

use std::path::Path;

use serde::{Deserialize, Serialize};
use starbeam::{Algorithm, Baseline, Protocol, ScenarioParams, UserSetup};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("bad override `{0}`: expected KEY=VALUE")]
    Override(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Pen,
    Ele,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    Es,
    Ms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineName {
    StarRis,
    ConventionalRis,
    UniformEs,
    FarFieldDesign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupName {
    Random,
    Inline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// BS transmit power in dBm.
    Power,
    /// Surface element count; must be a multiple of `n_y`.
    Elements,
}

impl SweepKind {
    pub fn label(self) -> &'static str {
        match self {
            SweepKind::Power => "power_dbm",
            SweepKind::Elements => "elements",
        }
    }
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Pen => Algorithm::Pen,
            AlgorithmName::Ele => Algorithm::Ele,
        }
    }
}

impl From<ProtocolName> for Protocol {
    fn from(p: ProtocolName) -> Self {
        match p {
            ProtocolName::Es => Protocol::Es,
            ProtocolName::Ms => Protocol::Ms,
        }
    }
}

impl From<BaselineName> for Baseline {
    fn from(b: BaselineName) -> Self {
        match b {
            BaselineName::StarRis => Baseline::StarRis,
            BaselineName::ConventionalRis => Baseline::ConventionalRis,
            BaselineName::UniformEs => Baseline::UniformEs,
            BaselineName::FarFieldDesign => Baseline::FarFieldDesign,
        }
    }
}

impl From<SetupName> for UserSetup {
    fn from(s: SetupName) -> Self {
        match s {
            SetupName::Random => UserSetup::Random,
            SetupName::Inline => UserSetup::Inline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub values: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            kind: SweepKind::Power,
            values: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; trial `t` uses a seed derived from `(seed, t)`.
    pub seed: u64,
    pub trials: usize,
    pub user_setup: SetupName,
    pub algorithms: Vec<AlgorithmName>,
    pub protocols: Vec<ProtocolName>,
    pub baselines: Vec<BaselineName>,
    /// Transmit power when the sweep runs over elements.
    pub power_dbm: f64,
    /// Element count when the sweep runs over power.
    pub elements: usize,
    /// Surface elements along y; the z extent is `elements / n_y`.
    pub n_y: usize,
    pub wavelength_m: f64,
    pub clusters: usize,
    pub noise_dbm: f64,
    pub bs_antennas: usize,
    pub user_antennas: usize,
    pub users: usize,
    pub radii_m: Vec<f64>,
    /// User priorities; all ones when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub eps_bcd: f64,
    pub max_iterations: usize,
    /// Disable to get byte-identical output files across runs.
    pub record_timing: bool,
    pub sweep: SweepSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 20,
            user_setup: SetupName::Random,
            algorithms: vec![AlgorithmName::Ele],
            protocols: vec![ProtocolName::Es, ProtocolName::Ms],
            baselines: vec![BaselineName::StarRis],
            power_dbm: 10.0,
            elements: 40,
            n_y: 5,
            wavelength_m: 0.03,
            clusters: 16,
            noise_dbm: -110.0,
            bs_antennas: 16,
            user_antennas: 4,
            users: 4,
            radii_m: vec![2.0, 4.0],
            weights: None,
            eps_bcd: 1e-3,
            max_iterations: 200,
            record_timing: true,
            sweep: SweepSpec::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (defaults when `None`), applies `KEY=VALUE` overrides in
    /// order and validates. Dotted keys address the `[sweep]` table.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?,
            None => String::new(),
        };
        if overrides.is_empty() {
            return Self::from_toml_str(&text);
        }
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg = Self::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(invalid("trials", "at least one trial is required"));
        }
        for (field, empty) in [
            ("algorithms", self.algorithms.is_empty()),
            ("protocols", self.protocols.is_empty()),
            ("baselines", self.baselines.is_empty()),
            ("radii_m", self.radii_m.is_empty()),
            ("sweep.values", self.sweep.values.is_empty()),
        ] {
            if empty {
                return Err(invalid(field, "list must be nonempty"));
            }
        }
        for (field, v) in [
            ("n_y", self.n_y),
            ("clusters", self.clusters),
            ("bs_antennas", self.bs_antennas),
            ("user_antennas", self.user_antennas),
            ("users", self.users),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        self.check_elements("elements", self.elements)?;
        if !(self.wavelength_m > 0.0) {
            return Err(invalid("wavelength_m", "must be positive"));
        }
        if !self.radii_m.iter().all(|r| *r > 0.0 && r.is_finite()) {
            return Err(invalid("radii_m", "radii must be positive"));
        }
        if !self.noise_dbm.is_finite() || !self.power_dbm.is_finite() {
            return Err(invalid("noise_dbm", "powers must be finite"));
        }
        if !(self.eps_bcd > 0.0) {
            return Err(invalid("eps_bcd", "must be positive"));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.users {
                return Err(invalid("weights", format!("{} entries for {} users", w.len(), self.users)));
            }
            if !w.iter().all(|x| *x > 0.0 && x.is_finite()) {
                return Err(invalid("weights", "weights must be positive"));
            }
        }
        for &v in &self.sweep.values {
            if !v.is_finite() {
                return Err(invalid("sweep.values", "values must be finite"));
            }
            if self.sweep.kind == SweepKind::Elements {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(invalid("sweep.values", format!("{v} is not an element count")));
                }
                self.check_elements("sweep.values", v as usize)?;
            }
        }
        Ok(())
    }

    fn check_elements(&self, field: &'static str, n: usize) -> Result<(), ConfigError> {
        if n == 0 {
            return Err(invalid(field, "element count must be positive"));
        }
        if !n.is_multiple_of(self.n_y) {
            return Err(invalid(field, format!("{n} elements do not fill rows of n_y = {}", self.n_y)));
        }
        Ok(())
    }

    /// Number of rows the sweep produces.
    pub fn grid_size(&self) -> usize {
        self.sweep.values.len() * self.trials * self.algorithms.len() * self.protocols.len() * self.baselines.len()
    }

    /// Geometry parameters for a surface of `elements` elements.
    pub fn scenario_params(&self, elements: usize) -> ScenarioParams<f64> {
        ScenarioParams {
            wavelength: self.wavelength_m,
            n_y: self.n_y,
            n_z: elements / self.n_y,
            bs_antennas: self.bs_antennas,
            user_antennas: self.user_antennas,
            users: self.users,
            radii: self.radii_m.clone(),
            ..Default::default()
        }
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(item.to_string()));
    }
    // Bare words fall back to strings so `user_setup=inline` works unquoted.
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap_or(key);
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::Override(item.to_string()))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
