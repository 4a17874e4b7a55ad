//! Config-driven experiment runner.
//!
//! The harness turns an [`ExperimentConfig`] into a [`RunReport`]: it
//! resolves the process, calibrates levels, fans the replicates out across
//! workers, pools the per-window counts, runs every estimator route, and
//! attaches closed-form targets where the process has them. A second entry
//! point, [`run_diagnostics`], evaluates the condition statistics over a
//! grid of window lengths instead of estimating indices at one.
//!
//! Reports are emitted as a single JSON document mirroring the report
//! struct and as fixed-schema CSV tables (estimates, histograms,
//! diagnostics). Except for the wall-clock field, output is byte-identical
//! for a given config regardless of worker count: per-replicate seeds are
//! derived from the master seed by replicate index, replicate results are
//! collected positionally, and everything pooled is either an integer
//! count or folded in replicate order.
//!
//! Presets ship the reference experiments (see [`preset_names`]) so each
//! headline table is one command.

mod config;
mod emit;
mod presets;
mod report;
mod runner;

pub use config::{
    BlockRule, DiagnoseConfig, ExperimentConfig, GridStep, OutputFormat, ProcessChoice,
    DEFAULT_MASTER_SEED, OUT_DIR_ENV,
};
pub use emit::{
    cluster_sizes_csv, diagnose_json, diagnostics_csv, estimates_csv, multiplicity_csv,
    report_json, write_diagnose_files, write_run_files,
};
pub use presets::{preset, preset_names, JobKind, PresetJob};
pub use report::{estimate_rows, DiagnoseReport, ProcessSummary, RunReport, TargetRow};
pub use runner::{run_diagnostics, run_experiment};

use std::path::PathBuf;
use thiserror::Error;

use crate::diagnostics::DiagError;
use crate::estimators::EstimatorError;
use crate::generators::SpecError;
use crate::levels::LevelError;
use crate::pointproc::PointProcError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    ParseConfig(#[from] toml::de::Error),
    #[error("field `{field}`: {message}")]
    BadField {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    PointProc(#[from] PointProcError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
