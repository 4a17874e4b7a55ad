//! Report emission. JSON is one pretty-printed document mirroring the
//! report struct; CSV is one file per table with a fixed header:
//!
//! * `estimates.csv` — `estimator,value,std_error,event_count,target,delta`
//! * `multiplicity.csv` / `cluster_sizes.csv` —
//!   `count_vector,frequency,block_count` (vectors semicolon-joined)
//! * `diagnostics.csv` — `statistic,x,value,std_error` (x is the window
//!   length for trend statistics, epsilon for continuity, c for scaling)
//!
//! Undefined values are empty cells. Floats print in shortest
//! round-trip form, so emission is as deterministic as the report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::OutputFormat;
use super::report::{estimate_rows, DiagnoseReport, RunReport};
use super::{HarnessError, Result};
use crate::diagnostics::{ConditionReport, ContinuityReport, ScalingReport};
use crate::pointproc::{ClusterSizeHistogram, MultiplicityHistogram};

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn report_json(report: &RunReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn diagnose_json(report: &DiagnoseReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn estimates_csv(report: &RunReport) -> String {
    let mut out = String::from("estimator,value,std_error,event_count,target,delta\n");
    for (name, est) in estimate_rows(&report.estimates) {
        let target = report.targets.iter().find(|t| t.estimator == name);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            name,
            opt(est.value),
            opt(est.std_error),
            est.events,
            opt(target.map(|t| t.target)),
            opt(target.and_then(|t| t.delta)),
        );
    }
    out
}

pub fn multiplicity_csv(hist: &MultiplicityHistogram) -> String {
    let mut out = String::from("count_vector,frequency,block_count\n");
    for bin in &hist.bins {
        let vector: Vec<String> = bin.counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{},{}", vector.join(";"), bin.frequency, bin.blocks);
    }
    out
}

pub fn cluster_sizes_csv(hist: &ClusterSizeHistogram) -> String {
    let mut out = String::from("count_vector,frequency,block_count\n");
    for bin in &hist.bins {
        let _ = writeln!(out, "{},{},{}", bin.size, bin.frequency, bin.blocks);
    }
    out
}

/// Plot-data table: one row per grid point of each condition statistic,
/// plus the scaling and continuity summaries when present.
pub fn diagnostics_csv(
    conditions: &[ConditionReport],
    scaling: Option<&ScalingReport>,
    continuity: Option<&ContinuityReport>,
) -> String {
    let mut out = String::from("statistic,x,value,std_error\n");
    for condition in conditions {
        for point in &condition.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                condition.statistic,
                point.x,
                point.value,
                opt(point.std_error)
            );
        }
    }
    if let Some(s) = scaling {
        let _ = writeln!(
            out,
            "scaling_rate_ratio,{},{},{}",
            s.c,
            opt(s.rate_ratio),
            opt(s.rate_ratio_std_error)
        );
        let _ = writeln!(out, "scaling_tv_distance,{},{},", s.c, s.tv_distance);
    }
    if let Some(c) = continuity {
        for point in &c.points {
            let _ = writeln!(
                out,
                "continuity_eta,{},{},{}",
                point.epsilon,
                opt(point.estimate.value),
                opt(point.estimate.std_error)
            );
        }
        let _ = writeln!(
            out,
            "continuity_eta_subvector,0,{},{}",
            opt(c.subvector.value),
            opt(c.subvector.std_error)
        );
    }
    out
}

fn write_file(dir: &Path, name: &str, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|source| HarnessError::Write {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

/// Write the selected formats into `dir` (created if missing); returns
/// the paths written.
pub fn write_run_files(
    report: &RunReport,
    dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Json) {
        write_file(dir, "report.json", &report_json(report)?, &mut written)?;
    }
    if formats.contains(&OutputFormat::Csv) {
        write_file(dir, "estimates.csv", &estimates_csv(report), &mut written)?;
        write_file(
            dir,
            "multiplicity.csv",
            &multiplicity_csv(&report.multiplicity),
            &mut written,
        )?;
        write_file(
            dir,
            "cluster_sizes.csv",
            &cluster_sizes_csv(&report.cluster_sizes),
            &mut written,
        )?;
        write_file(
            dir,
            "diagnostics.csv",
            &diagnostics_csv(
                &report.conditions,
                report.scaling.as_ref(),
                report.continuity.as_ref(),
            ),
            &mut written,
        )?;
    }
    Ok(written)
}

pub fn write_diagnose_files(
    report: &DiagnoseReport,
    dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Json) {
        write_file(dir, "report.json", &diagnose_json(report)?, &mut written)?;
    }
    if formats.contains(&OutputFormat::Csv) {
        write_file(
            dir,
            "diagnostics.csv",
            &diagnostics_csv(
                &report.conditions,
                report.scaling.as_ref(),
                report.continuity.as_ref(),
            ),
            &mut written,
        )?;
    }
    Ok(written)
}
