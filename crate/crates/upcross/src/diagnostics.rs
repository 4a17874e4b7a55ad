//! Finite-n probes of the asymptotic side conditions behind the index
//! theory.
//!
//! The estimators in this crate are consistent only under structural
//! hypotheses that no finite sample can prove. What a simulation can do is
//! track the defining quantity of each hypothesis along a grid of window
//! lengths and report a trend:
//!
//! * the cross-margin sum `h_sum`: joint upcrossing probabilities of
//!   distinct margins, summed over offsets up to one block length and
//!   scaled by `n`. Vanishing means margins decluster independently and
//!   the marginal-combination route is valid; stabilizing at a positive
//!   value means joint upcrossings carry mass (the i = 1 term alone is
//!   reported too, since same-time joint upcrossings dominate the failure
//!   mode);
//! * the local oscillation statistic: probability of an upcrossing, two
//!   quiet steps, then another upcrossing within the same block, scaled by
//!   `n`. Vanishing justifies the two-step runs characterization;
//! * the level rescaling law: recalibrating levels for window length
//!   `floor(n/c)` must multiply the cluster rate by `c` and leave the
//!   cluster-size distribution unchanged;
//! * continuity in the rate vector: sending one margin's rate to zero must
//!   reproduce the index of the subvector without that margin.
//!
//! Verdicts use a documented heuristic (last grid value below half the
//! first reads as vanishing); the reports carry the values and standard
//! errors so a reader can judge the trend directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{runs_estimator_multivariate, Estimate, EstimatorError, ReplicateCounts};
use crate::generators::{generate_window, ProcessSpec, SeedRecord, SpecError};
use crate::levels::{levels_from_tau_prime, scaled_levels, tau_prime_for_nu, LevelError};
use crate::pointproc::{
    mark_exceedances, mark_upcrossings, union_block_sizes, BlockScheme, ClusterSizeAccumulator,
    ClusterSizeHistogram, PointProcError, UpcrossingMarks,
};
use crate::sim::map_replicates;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("cross-margin statistic needs d >= 2, process has d = {d}")]
    NeedsTwoMargins { d: usize },
    #[error("block length r = {r} too short; the statistic needs r >= {min}")]
    BlockTooShort { r: usize, min: usize },
    #[error("epsilon grid must be strictly decreasing and positive")]
    BadEpsilonGrid,
    #[error("margin index {margin} out of range for d = {d}")]
    BadMargin { margin: usize, d: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    PointProc(#[from] PointProcError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

pub type Result<T> = std::result::Result<T, DiagError>;

/// One grid evaluation of a condition statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Grid coordinate (window length n, or epsilon).
    pub x: f64,
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Trend hint over a grid, from a fixed heuristic: the last value below
/// half the first reads as vanishing; above three quarters as stabilizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    Vanishing,
    Stabilizing,
    Inconclusive,
}

/// A condition statistic evaluated over an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub statistic: String,
    pub points: Vec<GridPoint>,
    pub verdict: TrendVerdict,
}

impl ConditionReport {
    pub fn from_points(statistic: impl Into<String>, points: Vec<GridPoint>) -> Self {
        let verdict = match (points.first(), points.last()) {
            (Some(first), Some(last)) if points.len() >= 2 && first.value > 0.0 => {
                if last.value < 0.5 * first.value {
                    TrendVerdict::Vanishing
                } else if last.value > 0.75 * first.value {
                    TrendVerdict::Stabilizing
                } else {
                    TrendVerdict::Inconclusive
                }
            }
            (Some(_), Some(last)) if points.len() >= 2 => {
                // first value already zero: vanished iff it stayed there
                if last.value == 0.0 {
                    TrendVerdict::Vanishing
                } else {
                    TrendVerdict::Inconclusive
                }
            }
            _ => TrendVerdict::Inconclusive,
        };
        ConditionReport {
            statistic: statistic.into(),
            points,
            verdict,
        }
    }
}

/// Per-window cross-margin pair counts for the H statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HWindowCounts {
    /// Sum over margin pairs (j < j') and mark pairs at offset
    /// delta in [0, r-1] of the anchor correction n/(n - delta).
    pub weighted: f64,
    /// Pairs at offset zero: same-time joint upcrossings.
    pub i1_pairs: u64,
}

/// Count cross-margin mark pairs of one window.
///
/// For margins j < j', every pair (mark of j at p, mark of j' at p + delta)
/// with 0 <= delta <= r-1 contributes n/(n - delta), so that averaging over
/// windows estimates `sum_pairs sum_i n P(mark_j at 1, mark_j' at i)` with
/// i running over one block length.
pub fn h_window_counts(marks: &UpcrossingMarks, r: usize) -> HWindowCounts {
    let n = marks.n() as f64;
    let d = marks.d();
    let mut out = HWindowCounts::default();
    for j in 0..d {
        let left = marks.margin_positions(j);
        if left.is_empty() {
            continue;
        }
        for j2 in j + 1..d {
            let right = marks.margin_positions(j2);
            for &p in &left {
                for &q in &right {
                    if q < p {
                        continue;
                    }
                    let delta = (q - p) as usize;
                    if delta >= r {
                        continue;
                    }
                    out.weighted += n / (n - delta as f64);
                    if delta == 0 {
                        out.i1_pairs += 1;
                    }
                }
            }
        }
    }
    out
}

/// Count anchors of one window showing "mark, two quiet steps, then
/// another mark within the block": union mark at a, none at a+1 or a+2,
/// and at least one at an offset in [3, r-1]. Anchors run over the first
/// n - r + 1 times so every offset stays inside the window.
pub fn local_osc_window_count(marks: &UpcrossingMarks, r: usize) -> u64 {
    let n = marks.n();
    debug_assert!(r >= 5 && r <= n);
    let union = marks.union();
    let positions = marks.union_positions();
    let mut count = 0u64;
    for &p in &positions {
        let a = p as usize;
        if a > n - r {
            break;
        }
        if union[a + 1] || union[a + 2] {
            continue;
        }
        let lo = (p + 3) as u32;
        let hi = p + (r as u32 - 1);
        let idx = positions.partition_point(|&q| q < lo);
        if positions.get(idx).is_some_and(|&q| q <= hi) {
            count += 1;
        }
    }
    count
}

/// One Monte Carlo evaluation of the cross-margin H statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSumPoint {
    pub n: usize,
    pub k: usize,
    pub replicates: u64,
    /// The full truncated sum.
    pub value: f64,
    pub std_error: Option<f64>,
    /// The offset-zero term alone: n * P(two margins upcross together).
    pub i1_value: f64,
    pub i1_std_error: Option<f64>,
}

/// Estimate the cross-margin H statistic at one window length.
pub fn h_sum(
    spec: &ProcessSpec,
    tau_prime: &[f64],
    n: usize,
    k: Option<usize>,
    replicates: u64,
    workers: Option<usize>,
    master_seed: u64,
) -> Result<HSumPoint> {
    if spec.d() < 2 {
        return Err(DiagError::NeedsTwoMargins { d: spec.d() });
    }
    check_window(n)?;
    let scheme = block_scheme(n, k)?;
    let levels = levels_from_tau_prime(spec, tau_prime, n)?;
    let r = scheme.r();
    let per_rep: Vec<(f64, u64)> = map_replicates(replicates, workers, |rep| {
        let path = generate_window(spec, n, SeedRecord::derive(master_seed, rep))
            .expect("window length validated");
        let marks = mark_upcrossings(&path, &levels).expect("dimensions validated");
        let counts = h_window_counts(&marks, r);
        (counts.weighted, counts.i1_pairs)
    });
    let values: Vec<f64> = per_rep.iter().map(|&(w, _)| w).collect();
    let i1: Vec<f64> = per_rep.iter().map(|&(_, c)| c as f64).collect();
    let (value, std_error) = mean_and_se(&values);
    let (i1_value, i1_std_error) = mean_and_se(&i1);
    Ok(HSumPoint {
        n,
        k: scheme.k(),
        replicates,
        value,
        std_error,
        i1_value,
        i1_std_error,
    })
}

/// One Monte Carlo evaluation of the local oscillation statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOscPoint {
    pub n: usize,
    pub k: usize,
    pub replicates: u64,
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Estimate the local oscillation statistic at one window length.
pub fn local_osc(
    spec: &ProcessSpec,
    tau_prime: &[f64],
    n: usize,
    k: Option<usize>,
    replicates: u64,
    workers: Option<usize>,
    master_seed: u64,
) -> Result<LocalOscPoint> {
    let scheme = block_scheme(n, k)?;
    let r = scheme.r();
    if r < 5 {
        return Err(DiagError::BlockTooShort { r, min: 5 });
    }
    let levels = levels_from_tau_prime(spec, tau_prime, n)?;
    let anchors = (n - r + 1) as f64;
    let per_rep: Vec<f64> = map_replicates(replicates, workers, |rep| {
        let path = generate_window(spec, n, SeedRecord::derive(master_seed, rep))
            .expect("window length validated");
        let marks = mark_upcrossings(&path, &levels).expect("dimensions validated");
        n as f64 * local_osc_window_count(&marks, r) as f64 / anchors
    });
    let (value, std_error) = mean_and_se(&per_rep);
    Ok(LocalOscPoint {
        n,
        k: scheme.k(),
        replicates,
        value,
        std_error,
    })
}

/// Comparison of cluster rate and cluster-size distribution under
/// rescaled levels against the unscaled baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub c: f64,
    pub n: usize,
    pub k: usize,
    pub replicates: u64,
    /// Mean nonempty full blocks per window at c = 1.
    pub base_cluster_rate: f64,
    /// Same under levels calibrated for floor(n/c).
    pub scaled_cluster_rate: f64,
    /// scaled / base; the rescaling law predicts c.
    pub rate_ratio: Option<f64>,
    pub rate_ratio_std_error: Option<f64>,
    /// Total variation distance between the two cluster-size histograms;
    /// the law predicts 0.
    pub tv_distance: f64,
    pub base_histogram: ClusterSizeHistogram,
    pub scaled_histogram: ClusterSizeHistogram,
}

/// Check the level rescaling law: both arms run on the same windows (same
/// seeds), differing only in level calibration, so c = 1 is exactly
/// neutral and larger c isolates the level effect from sampling noise.
pub fn scaling_check(
    spec: &ProcessSpec,
    tau_prime: &[f64],
    n: usize,
    c: f64,
    k: Option<usize>,
    replicates: u64,
    workers: Option<usize>,
    master_seed: u64,
) -> Result<ScalingReport> {
    check_window(n)?;
    let scheme = block_scheme(n, k)?;
    let base_levels = levels_from_tau_prime(spec, tau_prime, n)?;
    let scaled = scaled_levels(spec, tau_prime, n, c)?;
    struct Arm {
        nonempty: u64,
        sizes: Vec<u32>,
    }
    let per_rep: Vec<(Arm, Arm)> = map_replicates(replicates, workers, |rep| {
        let path = generate_window(spec, n, SeedRecord::derive(master_seed, rep))
            .expect("window length validated");
        let arm = |levels| {
            let marks = mark_upcrossings(&path, levels).expect("dimensions validated");
            let sizes = union_block_sizes(&marks, &scheme);
            Arm {
                nonempty: sizes.iter().filter(|&&s| s > 0).count() as u64,
                sizes,
            }
        };
        (arm(&base_levels), arm(&scaled))
    });
    let mut base_acc = ClusterSizeAccumulator::default();
    let mut scaled_acc = ClusterSizeAccumulator::default();
    let (mut base_total, mut scaled_total) = (0u64, 0u64);
    for (base, scaled) in &per_rep {
        base_total += base.nonempty;
        scaled_total += scaled.nonempty;
        for &s in &base.sizes {
            base_acc.add_union_size(s);
        }
        for &s in &scaled.sizes {
            scaled_acc.add_union_size(s);
        }
    }
    let base_hist = base_acc.finalize();
    let scaled_hist = scaled_acc.finalize();
    let reps = replicates as f64;
    let ratio_stat = |skip: Option<usize>| {
        let (mut b, mut s) = (base_total, scaled_total);
        if let Some(i) = skip {
            b -= per_rep[i].0.nonempty;
            s -= per_rep[i].1.nonempty;
        }
        (b > 0).then(|| s as f64 / b as f64)
    };
    let rate_ratio = ratio_stat(None);
    let rate_ratio_std_error =
        rate_ratio.and_then(|_| jackknife_paired(per_rep.len(), &ratio_stat));
    Ok(ScalingReport {
        c,
        n,
        k: scheme.k(),
        replicates,
        base_cluster_rate: base_total as f64 / reps,
        scaled_cluster_rate: scaled_total as f64 / reps,
        rate_ratio,
        rate_ratio_std_error,
        tv_distance: tv_distance(&base_hist, &scaled_hist),
        base_histogram: base_hist,
        scaled_histogram: scaled_hist,
    })
}

/// Total variation distance between two cluster-size histograms
/// (half the L1 distance of the frequency tables).
pub fn tv_distance(a: &ClusterSizeHistogram, b: &ClusterSizeHistogram) -> f64 {
    let sizes: std::collections::BTreeSet<u32> = a
        .bins
        .iter()
        .map(|bin| bin.size)
        .chain(b.bins.iter().map(|bin| bin.size))
        .collect();
    0.5 * sizes
        .into_iter()
        .map(|s| (a.frequency(s) - b.frequency(s)).abs())
        .sum::<f64>()
}

/// Index estimate at one point of the shrinking-rate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityPoint {
    pub epsilon: f64,
    pub estimate: Estimate,
}

/// Behaviour of the index as one margin's rate shrinks to zero, against
/// the index of the process without that margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Margin whose rate is sent to zero.
    pub margin: usize,
    pub n: usize,
    pub replicates: u64,
    pub points: Vec<ContinuityPoint>,
    /// Runs estimate on the subvector process with the margin dropped.
    pub subvector: Estimate,
    /// |estimate at smallest epsilon - subvector estimate|, when both
    /// are defined.
    pub gap_at_smallest: Option<f64>,
}

/// Check continuity of the index in the rate vector: margin `margin`'s
/// rate is replaced by each epsilon in turn (all windows shared across
/// epsilons, so the approach is monotone up to level effects alone), and
/// the epsilon = 0 endpoint is the subvector process without that margin.
pub fn continuity_check(
    spec: &ProcessSpec,
    nu_base: &[f64],
    margin: usize,
    epsilons: &[f64],
    n: usize,
    replicates: u64,
    workers: Option<usize>,
    master_seed: u64,
) -> Result<ContinuityReport> {
    check_window(n)?;
    let d = spec.d();
    if margin >= d {
        return Err(DiagError::BadMargin { margin, d });
    }
    if epsilons.is_empty()
        || epsilons.iter().any(|&e| !(e > 0.0))
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(DiagError::BadEpsilonGrid);
    }
    let level_grid: Vec<_> = epsilons
        .iter()
        .map(|&eps| {
            let mut nu = nu_base.to_vec();
            nu[margin] = eps;
            let tau_prime = tau_prime_for_nu(spec, &nu)?;
            levels_from_tau_prime(spec, &tau_prime, n)
        })
        .collect::<std::result::Result<_, _>>()?;
    let per_rep: Vec<Vec<crate::pointproc::RunsCounts>> =
        map_replicates(replicates, workers, |rep| {
            let path = generate_window(spec, n, SeedRecord::derive(master_seed, rep))
                .expect("window length validated");
            level_grid
                .iter()
                .map(|levels| {
                    let marks = mark_upcrossings(&path, levels).expect("dimensions validated");
                    crate::pointproc::runs_counts_union(&marks)
                })
                .collect()
        });
    let points: Vec<ContinuityPoint> = epsilons
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let reps: Vec<ReplicateCounts> = per_rep
                .iter()
                .map(|row| runs_only_counts(d, n, row[i]))
                .collect();
            Ok(ContinuityPoint {
                epsilon: eps,
                estimate: runs_estimator_multivariate(&reps)?,
            })
        })
        .collect::<Result<_>>()?;

    // epsilon = 0 endpoint: the process without the shrinking margin
    let sub_lags: Vec<Vec<i64>> = (0..d)
        .filter(|&j| j != margin)
        .map(|j| spec.lags()[j].clone())
        .collect();
    let sub_nu: Vec<f64> = (0..d)
        .filter(|&j| j != margin)
        .map(|j| nu_base[j])
        .collect();
    let sub_spec = crate::generators::make_process(sub_lags)?;
    let sub_tau_prime = tau_prime_for_nu(&sub_spec, &sub_nu)?;
    let sub_levels = levels_from_tau_prime(&sub_spec, &sub_tau_prime, n)?;
    let sub_reps: Vec<ReplicateCounts> = map_replicates(replicates, workers, |rep| {
        let path = generate_window(&sub_spec, n, SeedRecord::derive(master_seed, rep))
            .expect("window length validated");
        let marks = mark_upcrossings(&path, &sub_levels).expect("dimensions validated");
        runs_only_counts(sub_spec.d(), n, crate::pointproc::runs_counts_union(&marks))
    });
    let subvector = runs_estimator_multivariate(&sub_reps)?;
    let gap_at_smallest = match (
        points.last().and_then(|p| p.estimate.value),
        subvector.value,
    ) {
        (Some(last), Some(sub)) => Some((last - sub).abs()),
        _ => None,
    };
    Ok(ContinuityReport {
        margin,
        n,
        replicates,
        points,
        subvector,
        gap_at_smallest,
    })
}

/// A ReplicateCounts carrying only union runs counts, for estimators that
/// need nothing else.
fn runs_only_counts(d: usize, n: usize, runs: crate::pointproc::RunsCounts) -> ReplicateCounts {
    ReplicateCounts {
        n,
        marks: vec![0; d],
        union_marks: 0,
        exceed: vec![0; d],
        union_exceed: 0,
        runs_union: runs,
        runs_margin: vec![crate::pointproc::RunsCounts::default(); d],
        union_in_full_blocks: 0,
        nonempty_full_blocks: 0,
        total_full_blocks: 0,
    }
}

fn check_window(n: usize) -> Result<()> {
    if n < 2 {
        return Err(DiagError::Spec(SpecError::WindowTooShort { n }));
    }
    Ok(())
}

fn block_scheme(n: usize, k: Option<usize>) -> Result<BlockScheme> {
    Ok(match k {
        Some(k) => BlockScheme::new(n, k)?,
        None => BlockScheme::sqrt_rule(n)?,
    })
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, Some((ss / (count * (count - 1.0))).sqrt()))
}

fn jackknife_paired<F>(replicates: usize, stat: &F) -> Option<f64>
where
    F: Fn(Option<usize>) -> Option<f64>,
{
    if replicates < 2 {
        return None;
    }
    let mut values = Vec::with_capacity(replicates);
    for r in 0..replicates {
        values.push(stat(Some(r))?);
    }
    let mean = values.iter().sum::<f64>() / replicates as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some(((replicates as f64 - 1.0) / replicates as f64 * ss).sqrt())
}

/// Count summaries for one window at one level vector, as the harness
/// folds them: estimator counts plus the diagnostics contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDiagnostics {
    pub h: HWindowCounts,
    pub local_osc_count: u64,
}

/// Compute the in-run diagnostics of one window (block length from the
/// scheme; the local oscillation count is skipped when r < 5).
pub fn window_diagnostics(marks: &UpcrossingMarks, scheme: &BlockScheme) -> WindowDiagnostics {
    let r = scheme.r();
    WindowDiagnostics {
        h: if marks.d() >= 2 {
            h_window_counts(marks, r)
        } else {
            HWindowCounts::default()
        },
        local_osc_count: if r >= 5 {
            local_osc_window_count(marks, r)
        } else {
            0
        },
    }
}

/// Convenience used by tests and the harness: mark one window and collect
/// estimator counts in one step.
pub fn window_counts(
    path: &crate::generators::SamplePath,
    levels: &crate::levels::LevelVector,
    scheme: &BlockScheme,
) -> Result<ReplicateCounts> {
    let marks = mark_upcrossings(path, levels)?;
    let exceeds = mark_exceedances(path, levels)?;
    Ok(ReplicateCounts::collect(&marks, &exceeds, scheme))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::builtin_process;

    fn marks_from(cols: Vec<Vec<bool>>) -> UpcrossingMarks {
        let n = cols[0].len();
        let columns: Vec<Vec<f64>> = cols
            .iter()
            .map(|col| {
                // realize the mark pattern: value below 0.5, mark forces the
                // next value above 0.9, levels at 0.7
                let mut vals = vec![0.1; n + 1];
                for (i, &m) in col.iter().enumerate() {
                    if m {
                        vals[i + 1] = 0.95;
                    }
                }
                vals
            })
            .collect();
        let path = crate::generators::SamplePath::from_columns(columns).unwrap();
        let spec = builtin_process("iid", Some(cols.len())).unwrap();
        let levels = levels_from_tau_prime(&spec, &vec![0.3 * n as f64; cols.len()], n).unwrap();
        let marks = mark_upcrossings(&path, &levels).unwrap();
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(marks.margin(j), col.as_slice(), "fixture mark mismatch");
        }
        marks
    }

    #[test]
    fn h_counts_follow_the_offset_window() {
        let marks = marks_from(vec![
            vec![true, false, false, false, false, false],
            vec![true, false, true, false, false, false],
        ]);
        // pairs (0,0) delta 0 and (0,2) delta 2, with r = 3
        let counts = h_window_counts(&marks, 3);
        assert_eq!(counts.i1_pairs, 1);
        assert!((counts.weighted - (1.0 + 6.0 / 4.0)).abs() < 1e-12);
        // r = 2 drops the delta-2 pair
        let counts = h_window_counts(&marks, 2);
        assert!((counts.weighted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn h_counts_ignore_negative_offsets_and_same_margin() {
        // margin 1 marked before margin 0: offset negative, not counted
        let marks = marks_from(vec![
            vec![false, false, false, true, false, false],
            vec![false, true, false, false, false, false],
        ]);
        let counts = h_window_counts(&marks, 6);
        assert_eq!(counts.weighted, 0.0);
        assert_eq!(counts.i1_pairs, 0);

        // same-margin pairs never enter
        let marks = marks_from(vec![
            vec![true, false, true, false, false, false],
            vec![false; 6],
        ]);
        assert_eq!(h_window_counts(&marks, 6).weighted, 0.0);
    }

    #[test]
    fn local_osc_counts_resumed_clusters_only() {
        // mark at 0, quiet, mark at 3 within r = 5: counts once
        let marks = marks_from(vec![vec![
            true, false, false, true, false, false, false, false, false, false,
        ]]);
        assert_eq!(local_osc_window_count(&marks, 5), 1);

        // adjacent follow-up fails the quiet-step requirement
        let marks = marks_from(vec![vec![
            true, false, true, false, false, false, false, false, false, false,
        ]]);
        // anchor 0 fails (mark at 2); anchor 2 has no mark in [5, 6]
        assert_eq!(local_osc_window_count(&marks, 5), 0);

        // follow-up outside the block window does not count
        let marks = marks_from(vec![vec![
            true, false, false, false, false, true, false, false, false, false,
        ]]);
        assert_eq!(local_osc_window_count(&marks, 5), 0);
        assert_eq!(local_osc_window_count(&marks, 6), 1);
    }

    #[test]
    fn verdict_heuristic_matches_documentation() {
        let p = |v: f64| GridPoint {
            x: 0.0,
            value: v,
            std_error: None,
        };
        let report = ConditionReport::from_points("s", vec![p(0.9), p(0.4)]);
        assert_eq!(report.verdict, TrendVerdict::Vanishing);
        let report = ConditionReport::from_points("s", vec![p(1.0), p(0.96)]);
        assert_eq!(report.verdict, TrendVerdict::Stabilizing);
        let report = ConditionReport::from_points("s", vec![p(1.0), p(0.6)]);
        assert_eq!(report.verdict, TrendVerdict::Inconclusive);
        let report = ConditionReport::from_points("s", vec![p(1.0)]);
        assert_eq!(report.verdict, TrendVerdict::Inconclusive);
        let report = ConditionReport::from_points("s", vec![p(0.0), p(0.0)]);
        assert_eq!(report.verdict, TrendVerdict::Vanishing);
    }

    #[test]
    fn h_sum_needs_two_margins() {
        let spec = builtin_process("iid", Some(1)).unwrap();
        assert!(matches!(
            h_sum(&spec, &[1.0], 100, None, 5, Some(1), 7),
            Err(DiagError::NeedsTwoMargins { d: 1 })
        ));
    }

    #[test]
    fn local_osc_needs_long_blocks() {
        let spec = builtin_process("iid", Some(1)).unwrap();
        assert!(matches!(
            local_osc(&spec, &[1.0], 100, Some(50), 5, Some(1), 7),
            Err(DiagError::BlockTooShort { r: 2, min: 5 })
        ));
    }

    #[test]
    fn scaling_at_c_equal_one_is_exactly_neutral() {
        let spec = builtin_process("ex61", None).unwrap();
        let report = scaling_check(&spec, &[1.0, 1.0], 400, 1.0, None, 40, Some(1), 99).unwrap();
        assert_eq!(report.rate_ratio, Some(1.0));
        assert_eq!(report.tv_distance, 0.0);
        assert_eq!(report.base_histogram, report.scaled_histogram);
        assert_eq!(report.base_cluster_rate, report.scaled_cluster_rate);
    }

    #[test]
    fn scaling_rejects_bad_constants() {
        let spec = builtin_process("iid", Some(1)).unwrap();
        assert!(scaling_check(&spec, &[1.0], 100, 0.0, None, 5, Some(1), 7).is_err());
        assert!(scaling_check(&spec, &[1.0], 100, 80.0, None, 5, Some(1), 7).is_err());
    }

    #[test]
    fn continuity_grid_validation() {
        let spec = builtin_process("ex61", None).unwrap();
        let bad_order = continuity_check(&spec, &[2.0, 1.0], 1, &[0.1, 0.5], 200, 5, Some(1), 7);
        assert!(matches!(bad_order, Err(DiagError::BadEpsilonGrid)));
        let bad_margin = continuity_check(&spec, &[2.0, 1.0], 2, &[0.5, 0.1], 200, 5, Some(1), 7);
        assert!(matches!(
            bad_margin,
            Err(DiagError::BadMargin { margin: 2, d: 2 })
        ));
    }

    #[test]
    fn continuity_on_independent_margins_stays_near_one() {
        let spec = builtin_process("iid", Some(2)).unwrap();
        let report =
            continuity_check(&spec, &[1.0, 1.0], 1, &[0.5, 0.1], 500, 200, Some(1), 11).unwrap();
        assert_eq!(report.points.len(), 2);
        for point in &report.points {
            let v = point.estimate.value.unwrap();
            assert!(v > 0.85, "epsilon {}: {v}", point.epsilon);
        }
        let sub = report.subvector.value.unwrap();
        assert!(sub > 0.85);
        assert!(report.gap_at_smallest.unwrap() < 0.15);
    }

    #[test]
    fn tv_distance_is_half_l1() {
        let mut a = ClusterSizeAccumulator::default();
        for s in [1u32, 1, 2, 2] {
            a.add_union_size(s);
        }
        let mut b = ClusterSizeAccumulator::default();
        for s in [1u32, 1, 1, 3] {
            b.add_union_size(s);
        }
        let (a, b) = (a.finalize(), b.finalize());
        // freqs a: {1: .5, 2: .5}; b: {1: .75, 3: .25}
        let tv = tv_distance(&a, &b);
        assert!((tv - 0.5 * (0.25 + 0.5 + 0.25)).abs() < 1e-12);
    }
}
