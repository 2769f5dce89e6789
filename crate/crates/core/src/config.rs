//! Effective configuration for each subcommand.
//!
//! Values are layered: built-in defaults, then the `[common]` section of a
//! TOML file, then the subcommand's own section, then command-line flags.
//! Each layer only overrides the keys it sets.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseModel;
use crate::error::{Error, Result};
use crate::link_budget::LinkParams;

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_SAMPLES: usize = 5000;
pub const DEFAULT_THRESHOLD: f64 = 0.11;

/// Which series a subcommand computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protection {
    Unprotected,
    Protected,
    #[default]
    Both,
}

impl Protection {
    pub fn unprotected(self) -> bool {
        matches!(self, Protection::Unprotected | Protection::Both)
    }

    pub fn protected(self) -> bool {
        matches!(self, Protection::Protected | Protection::Both)
    }

    /// Selected modes as `protected` flags, unprotected first.
    pub fn modes(self) -> Vec<bool> {
        [false, true]
            .into_iter()
            .filter(|&p| {
                if p {
                    self.protected()
                } else {
                    self.unprotected()
                }
            })
            .collect()
    }
}

impl fmt::Display for Protection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protection::Unprotected => "unprotected",
            Protection::Protected => "protected",
            Protection::Both => "both",
        })
    }
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config(format!(
                "steps must be at least 2, got {}",
                self.steps
            )));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Config("grid range must be finite".into()));
        }
        Ok(())
    }

    pub fn resolution(&self) -> f64 {
        (self.stop - self.start) / (self.steps - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + self.resolution() * i as f64
                }
            })
            .collect()
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    Ok(())
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 0.5) {
        return Err(Error::Config(format!(
            "threshold must lie in (0, 0.5), got {threshold}"
        )));
    }
    Ok(())
}

/// A subcommand's effective configuration.
pub trait SectionConfig: Serialize + DeserializeOwned + Default {
    /// Name of the file section and of the subcommand.
    const SECTION: &'static str;

    fn validate(&self) -> Result<()>;

    /// The configuration rendered as TOML.
    fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize to TOML")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaSweepConfig {
    pub seed: u64,
    pub samples: usize,
    pub protection: Protection,
    pub threshold: f64,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub steps: usize,
}

impl Default for AlphaSweepConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            protection: Protection::Both,
            threshold: DEFAULT_THRESHOLD,
            start_deg: 0.0,
            stop_deg: 90.0,
            steps: 91,
        }
    }
}

impl AlphaSweepConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            start: self.start_deg,
            stop: self.stop_deg,
            steps: self.steps,
        }
    }
}

impl SectionConfig for AlphaSweepConfig {
    const SECTION: &'static str = "sweep-alpha";

    fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        check_samples(self.samples)?;
        check_threshold(self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSweepConfig {
    pub seed: u64,
    pub samples: usize,
    pub protection: Protection,
    pub threshold: f64,
    pub jitter_sigma: f64,
    pub start_rad: f64,
    pub stop_rad: f64,
    pub steps: usize,
}

impl Default for BiasSweepConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            protection: Protection::Both,
            threshold: DEFAULT_THRESHOLD,
            jitter_sigma: crate::channel::DEFAULT_JITTER_SIGMA,
            start_rad: 0.0,
            stop_rad: 1.0,
            steps: 51,
        }
    }
}

impl BiasSweepConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            start: self.start_rad,
            stop: self.stop_rad,
            steps: self.steps,
        }
    }
}

impl SectionConfig for BiasSweepConfig {
    const SECTION: &'static str = "sweep-bias";

    fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        check_samples(self.samples)?;
        check_threshold(self.threshold)?;
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "jitter_sigma must be non-negative, got {}",
                self.jitter_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PguessSweepConfig {
    pub seed: u64,
    pub samples: usize,
    pub protection: Protection,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub steps: usize,
}

impl Default for PguessSweepConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            protection: Protection::Both,
            start_deg: 0.0,
            stop_deg: 90.0,
            steps: 91,
        }
    }
}

impl PguessSweepConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            start: self.start_deg,
            stop: self.stop_deg,
            steps: self.steps,
        }
    }
}

impl SectionConfig for PguessSweepConfig {
    const SECTION: &'static str = "sweep-pguess";

    fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        check_samples(self.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceSweepConfig {
    pub seed: u64,
    pub samples: usize,
    pub protection: Protection,
    pub threshold: f64,
    pub beta: f64,
    pub mu: f64,
    pub y0: f64,
    pub start_rad: f64,
    pub stop_rad: f64,
    pub steps: usize,
}

impl Default for DistanceSweepConfig {
    fn default() -> Self {
        let link = LinkParams::default();
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            protection: Protection::Both,
            threshold: link.threshold,
            beta: link.beta,
            mu: link.mu,
            y0: link.y0,
            start_rad: 0.0,
            stop_rad: 1.0,
            steps: 51,
        }
    }
}

impl DistanceSweepConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            start: self.start_rad,
            stop: self.stop_rad,
            steps: self.steps,
        }
    }

    pub fn link(&self) -> LinkParams {
        LinkParams {
            beta: self.beta,
            mu: self.mu,
            y0: self.y0,
            threshold: self.threshold,
        }
    }
}

impl SectionConfig for DistanceSweepConfig {
    const SECTION: &'static str = "sweep-distance";

    fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        if self.start_rad < 0.0 {
            return Err(Error::Config("sigma grid must be non-negative".into()));
        }
        if self.samples < crate::link_budget::MIN_INTRINSIC_SAMPLES {
            return Err(Error::Config(format!(
                "sweep-distance needs at least {} samples, got {}",
                crate::link_budget::MIN_INTRINSIC_SAMPLES,
                self.samples
            )));
        }
        self.link()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random `(u, ρ)` pairs checked by the certification.
    pub samples: usize,
    pub tolerance: f64,
    /// Fault injection: 1-based index of an element to perturb.
    pub corrupt_element: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: 100,
            tolerance: 1e-10,
            corrupt_element: None,
        }
    }
}

impl SectionConfig for VerifyConfig {
    const SECTION: &'static str = "verify-design";

    fn validate(&self) -> Result<()> {
        check_samples(self.samples)?;
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if let Some(k) = self.corrupt_element {
            if !(1..=12).contains(&k) {
                return Err(Error::Config(format!(
                    "corrupt_element must lie in 1..=12, got {k}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub seed: u64,
    /// Number of pulses.
    pub samples: usize,
    pub protection: Protection,
    /// Per-pulse event log; with both modes the mode is inserted before the
    /// extension.
    pub events: Option<PathBuf>,
    pub noise: NoiseModel,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: 10_000,
            protection: Protection::Both,
            events: None,
            noise: NoiseModel::noiseless(),
        }
    }
}

impl SectionConfig for ProtocolConfig {
    const SECTION: &'static str = "run-protocol";

    fn validate(&self) -> Result<()> {
        check_samples(self.samples)?;
        self.noise
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

const SECTIONS: [&str; 7] = [
    "common",
    AlphaSweepConfig::SECTION,
    BiasSweepConfig::SECTION,
    PguessSweepConfig::SECTION,
    DistanceSweepConfig::SECTION,
    VerifyConfig::SECTION,
    ProtocolConfig::SECTION,
];

/// A parsed configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, value) in &table {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown section [{key}]")));
            }
            if !value.is_table() {
                return Err(Error::Config(format!("[{key}] must be a table")));
            }
        }
        Ok(Self { table })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn section(&self, name: &str) -> Option<&toml::Table> {
        self.table.get(name).and_then(toml::Value::as_table)
    }
}

/// Layers defaults, `file` and `overrides` into a validated configuration.
///
/// Keys of `[common]` that the subcommand does not use are ignored; unknown
/// keys in the subcommand's section are errors.
pub fn resolve<C: SectionConfig>(file: Option<&ConfigFile>, overrides: &toml::Table) -> Result<C> {
    let mut merged =
        toml::Table::try_from(C::default()).map_err(|e| Error::Config(e.to_string()))?;
    let known = |merged: &toml::Table, k: &str| {
        merged.contains_key(k) || k == "events" && C::SECTION == ProtocolConfig::SECTION
    };
    if let Some(common) = file.and_then(|f| f.section("common")) {
        for (k, v) in common {
            if known(&merged, k) {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    if let Some(section) = file.and_then(|f| f.section(C::SECTION)) {
        for (k, v) in section {
            merged.insert(k.clone(), v.clone());
        }
    }
    for (k, v) in overrides {
        merged.insert(k.clone(), v.clone());
    }
    let cfg: C = toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("[{}] {}", C::SECTION, e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}
