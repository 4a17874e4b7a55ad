//! Experiment configuration: a flat TOML document plus programmatic
//! construction. Every field the runner reads is validated up front with
//! an error naming the field; unknown keys are rejected at parse time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{HarnessError, Result};
use crate::generators::{builtin_process, make_process, ProcessSpec};
use crate::pointproc::BlockScheme;

/// Master seed used when a config does not set one.
pub const DEFAULT_MASTER_SEED: u64 = 42;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "UPCROSS_OUT_DIR";

fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Json, OutputFormat::Csv]
}

fn bad(field: &'static str, message: String) -> HarnessError {
    HarnessError::BadField { field, message }
}

/// Which process to simulate: a builtin name (`"iid"`, `"ex61"`, `"ex62"`)
/// or explicit per-margin lag sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcessChoice {
    Builtin(String),
    Custom(Vec<Vec<i64>>),
}

impl ProcessChoice {
    pub fn resolve(&self, margins: Option<usize>) -> Result<ProcessSpec> {
        match self {
            ProcessChoice::Builtin(name) => Ok(builtin_process(name, margins)?),
            ProcessChoice::Custom(lags) => {
                if margins.is_some_and(|d| d != lags.len()) {
                    return Err(bad(
                        "margins",
                        format!("does not match the {} custom lag sets", lags.len()),
                    ));
                }
                Ok(make_process(lags.clone())?)
            }
        }
    }
}

/// Block partition rule: `"sqrt"` (k = floor of the square root of n)
/// or an explicit block count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockRule {
    #[default]
    Sqrt,
    Fixed(usize),
}

impl BlockRule {
    pub fn scheme(&self, n: usize) -> Result<BlockScheme> {
        Ok(match *self {
            BlockRule::Sqrt => BlockScheme::sqrt_rule(n)?,
            BlockRule::Fixed(k) => BlockScheme::new(n, k)?,
        })
    }

    /// The explicit block count, if one was given. Grid consumers pass
    /// this through so the sqrt rule re-applies at each window length.
    pub fn explicit(&self) -> Option<usize> {
        match *self {
            BlockRule::Sqrt => None,
            BlockRule::Fixed(k) => Some(k),
        }
    }
}

impl Serialize for BlockRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            BlockRule::Sqrt => serializer.serialize_str("sqrt"),
            BlockRule::Fixed(k) => serializer.serialize_u64(k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BlockRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Name(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(k) => Ok(BlockRule::Fixed(k)),
            Repr::Name(name) if name == "sqrt" => Ok(BlockRule::Sqrt),
            Repr::Name(name) => Err(serde::de::Error::custom(format!(
                "field `blocks`: must be \"sqrt\" or a block count, got {name:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// One experiment: a process observed through `replicates` windows of
/// length `n` at levels calibrated from `tau_prime`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessChoice,
    /// Margin count, for builtins that accept one (iid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margins: Option<usize>,
    /// Window length.
    pub n: usize,
    pub replicates: u64,
    /// Per-margin normalized upcrossing rates; margin j's level is
    /// 1 - tau_prime[j] / n.
    pub tau_prime: Vec<f64>,
    #[serde(default)]
    pub blocks: BlockRule,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker thread count; `None` uses the global pool. Never affects
    /// results, only wall-clock time, so it is accepted on input but left
    /// out of emitted reports to keep them comparable across machines.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    /// Rescaling constant for the in-run level scaling check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_c: Option<f64>,
    /// Strictly decreasing rate grid for the in-run continuity check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// 1-based margin whose rate the continuity check sends to zero;
    /// defaults to the last margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink_margin: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn process_spec(&self) -> Result<ProcessSpec> {
        self.process.resolve(self.margins)
    }

    /// Check every invariant the runner relies on. Errors name the field.
    pub fn validate(&self, spec: &ProcessSpec) -> Result<()> {
        if self.n < 2 {
            return Err(bad(
                "n",
                format!("window length must be at least 2, got {}", self.n),
            ));
        }
        if self.replicates == 0 {
            return Err(bad("replicates", "must be at least 1".into()));
        }
        validate_tau_prime(&self.tau_prime, spec.d(), self.n)?;
        validate_blocks(self.blocks, self.n)?;
        validate_workers(self.workers)?;
        if let Some(c) = self.scaling_c {
            if !c.is_finite() || c <= 0.0 {
                return Err(bad(
                    "scaling_c",
                    format!("must be positive and finite, got {c}"),
                ));
            }
            if (self.n as f64 / c).floor() < 2.0 {
                return Err(bad(
                    "scaling_c",
                    format!(
                        "calibration length floor(n/c) must be at least 2, got c = {c} at n = {}",
                        self.n
                    ),
                ));
            }
        }
        validate_continuity(self.epsilons.as_deref(), self.shrink_margin, spec.d())?;
        Ok(())
    }

    /// 0-based index of the margin the continuity check shrinks.
    pub fn shrink_margin_index(&self, d: usize) -> usize {
        self.shrink_margin.map_or(d - 1, |m| m - 1)
    }
}

fn validate_tau_prime(tau_prime: &[f64], d: usize, min_n: usize) -> Result<()> {
    if tau_prime.len() != d {
        return Err(bad(
            "tau_prime",
            format!("has {} entries, process has {} margins", tau_prime.len(), d),
        ));
    }
    for (j, &t) in tau_prime.iter().enumerate() {
        if !t.is_finite() || t <= 0.0 || t >= min_n as f64 {
            return Err(bad(
                "tau_prime",
                format!(
                    "entry {} is {t}, must lie strictly between 0 and n = {min_n}",
                    j + 1
                ),
            ));
        }
    }
    Ok(())
}

fn validate_blocks(blocks: BlockRule, min_n: usize) -> Result<()> {
    if let BlockRule::Fixed(k) = blocks {
        if k == 0 || k > min_n {
            return Err(bad(
                "blocks",
                format!("block count {k} must lie in 1..={min_n}"),
            ));
        }
    }
    Ok(())
}

fn validate_workers(workers: Option<usize>) -> Result<()> {
    if workers == Some(0) {
        return Err(bad("workers", "must be at least 1".into()));
    }
    Ok(())
}

fn validate_continuity(
    epsilons: Option<&[f64]>,
    shrink_margin: Option<usize>,
    d: usize,
) -> Result<()> {
    if let Some(eps) = epsilons {
        if eps.is_empty() || eps.iter().any(|&e| !e.is_finite() || e <= 0.0) {
            return Err(bad(
                "epsilons",
                "grid entries must be positive and finite".into(),
            ));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("epsilons", "grid must be strictly decreasing".into()));
        }
        if d < 2 {
            return Err(bad(
                "epsilons",
                "the continuity check drops one margin, so the process needs at least two".into(),
            ));
        }
    }
    if let Some(m) = shrink_margin {
        if epsilons.is_none() {
            return Err(bad(
                "shrink_margin",
                "set without an `epsilons` grid".into(),
            ));
        }
        if m == 0 || m > d {
            return Err(bad(
                "shrink_margin",
                format!("margin {m} out of range 1..={d}"),
            ));
        }
    }
    Ok(())
}

/// One window length on a diagnostics grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridStep {
    pub n: usize,
    pub replicates: u64,
}

/// A diagnostics run: condition statistics over a grid of window lengths,
/// plus optional scaling and continuity checks at the largest one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub process: ProcessChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margins: Option<usize>,
    pub tau_prime: Vec<f64>,
    /// Strictly increasing window lengths, each with its replicate count.
    pub grid: Vec<GridStep>,
    #[serde(default)]
    pub blocks: BlockRule,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink_margin: Option<usize>,
}

impl DiagnoseConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn process_spec(&self) -> Result<ProcessSpec> {
        self.process.resolve(self.margins)
    }

    pub fn validate(&self, spec: &ProcessSpec) -> Result<()> {
        if self.grid.is_empty() {
            return Err(bad("grid", "needs at least one window length".into()));
        }
        for step in &self.grid {
            if step.n < 2 {
                return Err(bad(
                    "grid",
                    format!("window length must be at least 2, got {}", step.n),
                ));
            }
            if step.replicates == 0 {
                return Err(bad(
                    "grid",
                    format!("replicates must be at least 1 at n = {}", step.n),
                ));
            }
        }
        if self.grid.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(bad(
                "grid",
                "window lengths must be strictly increasing".into(),
            ));
        }
        let min_n = self.grid[0].n;
        validate_tau_prime(&self.tau_prime, spec.d(), min_n)?;
        validate_blocks(self.blocks, min_n)?;
        validate_workers(self.workers)?;
        let last_n = self.grid[self.grid.len() - 1].n;
        if let Some(c) = self.scaling_c {
            if !c.is_finite() || c <= 0.0 {
                return Err(bad(
                    "scaling_c",
                    format!("must be positive and finite, got {c}"),
                ));
            }
            if (last_n as f64 / c).floor() < 2.0 {
                return Err(bad(
                    "scaling_c",
                    format!("calibration length floor(n/c) must be at least 2, got c = {c} at n = {last_n}"),
                ));
            }
        }
        validate_continuity(self.epsilons.as_deref(), self.shrink_margin, spec.d())?;
        Ok(())
    }

    pub fn shrink_margin_index(&self, d: usize) -> usize {
        self.shrink_margin.map_or(d - 1, |m| m - 1)
    }
}
