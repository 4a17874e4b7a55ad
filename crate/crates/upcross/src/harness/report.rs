//! Report types: everything one experiment produced, in one serializable
//! document. Field order is the JSON emission order; `wall_clock_seconds`
//! stays last so the determinism contract covers a contiguous prefix.

use serde::{Deserialize, Serialize};

use super::config::{DiagnoseConfig, ExperimentConfig};
use crate::diagnostics::{
    ConditionReport, ContinuityReport, HSumPoint, LocalOscPoint, ScalingReport,
};
use crate::estimators::{Estimate, EstimateReport};
use crate::generators::ProcessSpec;
use crate::levels::RateSummary;
use crate::limits::LimitValues;
use crate::pointproc::{ClusterSizeHistogram, MultiplicityHistogram};

/// The process actually simulated, echoed for the reader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSummary {
    pub name: String,
    pub margins: usize,
    pub lags: Vec<Vec<i64>>,
    /// Innovation stream each margin rides; distinct streams are
    /// independent.
    pub streams: Vec<usize>,
}

impl ProcessSummary {
    pub fn of(spec: &ProcessSpec) -> Self {
        ProcessSummary {
            name: spec.name().to_string(),
            margins: spec.d(),
            lags: spec.lags().to_vec(),
            streams: spec.streams().to_vec(),
        }
    }
}

/// Closed-form limit of one estimator and the deviation observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub estimator: String,
    pub target: f64,
    /// |estimate - target|; absent when the estimate is undefined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub process: ProcessSummary,
    /// Calibrated levels, one per margin.
    pub levels: Vec<f64>,
    pub rates: RateSummary,
    pub estimates: EstimateReport,
    /// Closed-form limiting values; every field absent for custom lag sets.
    pub limits: LimitValues,
    /// Per-estimator targets and absolute deviations (builtins only).
    pub targets: Vec<TargetRow>,
    /// Per-block count vectors over nonempty full blocks, pooled across
    /// replicates.
    pub multiplicity: MultiplicityHistogram,
    /// Union cluster sizes over the same blocks.
    pub cluster_sizes: ClusterSizeHistogram,
    /// Each margin's count distribution, conditional on that margin being
    /// active in the block.
    pub marginal_cluster_sizes: Vec<ClusterSizeHistogram>,
    /// Single-point condition statistics from the estimation windows.
    pub conditions: Vec<ConditionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuity: Option<ContinuityReport>,
    /// Total innovations drawn.
    pub draws: u64,
    /// The one field outside the determinism contract.
    pub wall_clock_seconds: f64,
}

/// A diagnostics run over a window-length grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub config: DiagnoseConfig,
    pub process: ProcessSummary,
    pub rates: RateSummary,
    /// Trends with verdicts, one per statistic.
    pub conditions: Vec<ConditionReport>,
    pub h_points: Vec<HSumPoint>,
    pub local_osc_points: Vec<LocalOscPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuity: Option<ContinuityReport>,
    pub draws: u64,
    pub wall_clock_seconds: f64,
}

/// Flat (name, estimate) view of a report, in the fixed emission order.
/// Margin-indexed estimators are numbered from 1.
pub fn estimate_rows(estimates: &EstimateReport) -> Vec<(String, &Estimate)> {
    let mut rows: Vec<(String, &Estimate)> = vec![("eta_runs".into(), &estimates.eta_runs)];
    for (j, est) in estimates.eta_marginal.iter().enumerate() {
        rows.push((format!("eta_marginal_{}", j + 1), est));
    }
    rows.push(("eta_combined".into(), &estimates.eta_combined));
    rows.push(("eta_blocks".into(), &estimates.eta_blocks));
    rows.push(("eta_empty".into(), &estimates.eta_empty));
    rows.push(("theta_direct".into(), &estimates.theta_direct));
    rows.push(("theta_from_eta".into(), &estimates.theta_from_eta));
    rows.push(("phi".into(), &estimates.phi_hat));
    rows.push(("psi".into(), &estimates.psi_hat));
    for (j, est) in estimates.nu_hat.iter().enumerate() {
        rows.push((format!("nu_{}", j + 1), est));
    }
    for (j, est) in estimates.tau_hat.iter().enumerate() {
        rows.push((format!("tau_{}", j + 1), est));
    }
    rows.push(("nu_union".into(), &estimates.nu_union_hat));
    rows.push(("tau_union".into(), &estimates.tau_union_hat));
    rows
}

/// Pair every estimator that has a closed-form limit with that limit and
/// the absolute deviation of its estimate.
pub(super) fn target_rows(
    estimates: &EstimateReport,
    limits: &LimitValues,
    rates: &RateSummary,
) -> Vec<TargetRow> {
    let mut targets: Vec<(String, f64)> = Vec::new();
    if let Some(eta) = limits.eta {
        for name in ["eta_runs", "eta_blocks", "eta_empty"] {
            targets.push((name.into(), eta));
        }
    }
    if let Some(marginal) = &limits.eta_marginal {
        for (j, &eta) in marginal.iter().enumerate() {
            targets.push((format!("eta_marginal_{}", j + 1), eta));
        }
    }
    if let Some(v) = limits.eta_combined {
        targets.push(("eta_combined".into(), v));
    }
    if let Some(theta) = limits.theta {
        targets.push(("theta_direct".into(), theta));
        targets.push(("theta_from_eta".into(), theta));
    }
    if let Some(v) = limits.phi {
        targets.push(("phi".into(), v));
    }
    if let Some(v) = limits.psi {
        targets.push(("psi".into(), v));
    }
    for (j, &v) in rates.nu.iter().enumerate() {
        targets.push((format!("nu_{}", j + 1), v));
    }
    for (j, &v) in rates.tau.iter().enumerate() {
        targets.push((format!("tau_{}", j + 1), v));
    }
    if let Some(v) = rates.nu_union {
        targets.push(("nu_union".into(), v));
    }
    if let Some(v) = rates.tau_union {
        targets.push(("tau_union".into(), v));
    }

    let rows = estimate_rows(estimates);
    let value_of = |name: &str| {
        rows.iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, est)| est.value)
    };
    targets
        .into_iter()
        .map(|(estimator, target)| TargetRow {
            delta: value_of(&estimator).map(|v| (v - target).abs()),
            estimator,
            target,
        })
        .collect()
}
