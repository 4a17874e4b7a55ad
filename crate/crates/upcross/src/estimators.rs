//! Index and rate estimators pooled over replicated windows.
//!
//! Every estimator consumes per-replicate count summaries and returns an
//! [`Estimate`]: a value, a standard error, and the event count behind it.
//! The upcrossings index eta has four routes:
//!
//! * runs: cluster-opening marks over all marks, on the union row;
//! * marginal runs per margin, plus the rate-weighted combination
//!   `sum_j nu_j eta_j / sum_j nu_j` (valid only when joint upcrossings of
//!   different margins are asymptotically negligible);
//! * blocks: reciprocal of the mean union mark count over nonempty blocks;
//! * empty-window: `log P(no union mark) / log phi`, using the identity
//!   that the no-upcrossing probability tends to `phi^eta`.
//!
//! The extremal index theta comes directly from `log P(max below levels)`
//! against the union exceedance rate, and independently from
//! `eta * nu_union / tau_union`; comparing the two checks the relation
//! that ties the indices together.
//!
//! Standard errors use a leave-one-replicate-out jackknife on the pooled
//! statistic. Replicates are independent windows, so the jackknife is
//! honest about within-window dependence, which a per-index binomial
//! formula would ignore. Estimates outside [0, 1] where an index must lie
//! are flagged, never clamped; impossible ratios (zero denominators,
//! degenerate probabilities) come back as defined-false values carrying
//! their counts, so callers can tell noise from bugs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointproc::{
    runs_counts_margin, runs_counts_union, union_block_sizes, BlockScheme, ExceedanceMarks,
    RunsCounts, UpcrossingMarks,
};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("no replicates supplied")]
    NoReplicates,
    #[error("rate vector has {got} entries, process has {expected} margins")]
    RateDimensionMismatch { expected: usize, got: usize },
    #[error("combination weight nu[{margin}] = {value} must be positive")]
    BadWeight { margin: usize, value: f64 },
    #[error("union exceedance rate is zero; cannot invert the index relation")]
    ZeroTauUnion,
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// One estimate with its uncertainty and provenance.
///
/// `value` is `None` when the estimator's defining ratio was degenerate
/// (zero denominator, probability estimate of exactly 0 or 1); `note` then
/// says why, with counts. `out_of_range` flags an index estimate outside
/// [0, 1]: the value is reported as computed, never clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub events: u64,
    pub out_of_range: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Estimate {
    /// An estimate of a quantity constrained to [0, 1] (an index or a
    /// probability); values outside are flagged.
    pub fn index(value: f64, std_error: Option<f64>, events: u64) -> Self {
        Estimate {
            value: Some(value),
            std_error,
            events,
            out_of_range: !(0.0..=1.0).contains(&value),
            note: None,
        }
    }

    /// An estimate of a nonnegative rate (no upper bound to flag).
    pub fn rate(value: f64, std_error: Option<f64>, events: u64) -> Self {
        Estimate {
            value: Some(value),
            std_error,
            events,
            out_of_range: value < 0.0,
            note: None,
        }
    }

    pub fn undefined(events: u64, note: impl Into<String>) -> Self {
        Estimate {
            value: None,
            std_error: None,
            events,
            out_of_range: false,
            note: Some(note.into()),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Count summary of one replicated window: everything the pooled
/// estimators need, and nothing path-sized. Integer counts make pooling
/// associative, so replicate order and worker count cannot change results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateCounts {
    pub n: usize,
    /// Upcrossing marks per margin.
    pub marks: Vec<u64>,
    /// Marks on the union row (joint marks counted once).
    pub union_marks: u64,
    /// Exceedances per margin.
    pub exceed: Vec<u64>,
    /// Times where any margin exceeds its level.
    pub union_exceed: u64,
    pub runs_union: RunsCounts,
    pub runs_margin: Vec<RunsCounts>,
    /// Union marks inside full blocks (remainder excluded).
    pub union_in_full_blocks: u64,
    /// Full blocks with at least one union mark.
    pub nonempty_full_blocks: u64,
    pub total_full_blocks: u64,
}

impl ReplicateCounts {
    pub fn collect(
        marks: &UpcrossingMarks,
        exceeds: &ExceedanceMarks,
        scheme: &BlockScheme,
    ) -> Self {
        let d = marks.d();
        let union_sizes = union_block_sizes(marks, scheme);
        ReplicateCounts {
            n: marks.n(),
            marks: (0..d).map(|j| marks.margin_count(j)).collect(),
            union_marks: marks.union_count(),
            exceed: (0..d).map(|j| exceeds.margin_count(j)).collect(),
            union_exceed: exceeds.union_count(),
            runs_union: runs_counts_union(marks),
            runs_margin: (0..d).map(|j| runs_counts_margin(marks, j)).collect(),
            union_in_full_blocks: union_sizes.iter().map(|&s| s as u64).sum(),
            nonempty_full_blocks: union_sizes.iter().filter(|&&s| s > 0).count() as u64,
            total_full_blocks: scheme.k() as u64,
        }
    }

    pub fn d(&self) -> usize {
        self.marks.len()
    }

    /// Window had no union upcrossing at all.
    pub fn is_empty_window(&self) -> bool {
        self.union_marks == 0
    }

    /// Window maximum stayed at or below the level in every margin.
    pub fn max_below_levels(&self) -> bool {
        self.union_exceed == 0
    }
}

fn check_nonempty(reps: &[ReplicateCounts]) -> Result<()> {
    if reps.is_empty() {
        return Err(EstimatorError::NoReplicates);
    }
    Ok(())
}

/// Leave-one-replicate-out standard error of a pooled statistic.
///
/// `stat(Some(r))` must evaluate the statistic with replicate `r` removed
/// and `stat(None)` on the full pool. Returns `None` when fewer than two
/// replicates exist or any leave-out value is undefined.
fn jackknife_se<F>(replicates: usize, stat: F) -> Option<f64>
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

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn pooled_runs<F>(reps: &[ReplicateCounts], select: F, label: &str) -> Estimate
where
    F: Fn(&ReplicateCounts) -> RunsCounts,
{
    let mut total = RunsCounts::default();
    for rep in reps {
        total.merge(select(rep));
    }
    let stat = |skip: Option<usize>| {
        let (mut num, mut den) = (total.num, total.den);
        if let Some(r) = skip {
            let c = select(&reps[r]);
            num -= c.num;
            den -= c.den;
        }
        ratio(num, den)
    };
    match stat(None) {
        Some(value) => Estimate::index(value, jackknife_se(reps.len(), stat), total.den),
        None => Estimate::undefined(0, format!("no {label} in the anchor range")),
    }
}

/// Runs estimate of the upcrossings index from the union row: the fraction
/// of union marks followed by two unmarked times.
pub fn runs_estimator_multivariate(reps: &[ReplicateCounts]) -> Result<Estimate> {
    check_nonempty(reps)?;
    Ok(pooled_runs(reps, |r| r.runs_union, "union upcrossings"))
}

/// Runs estimate of one margin's upcrossings index. Only the two-step
/// lookahead enters: a margin cannot mark consecutive times, so the
/// one-step factor is identically satisfied.
pub fn runs_estimator_marginal(reps: &[ReplicateCounts], margin: usize) -> Result<Estimate> {
    check_nonempty(reps)?;
    Ok(pooled_runs(
        reps,
        |r| r.runs_margin[margin],
        "margin upcrossings",
    ))
}

/// Rate-weighted combination of the marginal runs estimates,
/// `sum_j nu_j eta_j / sum_j nu_j`, jackknifed jointly over replicates.
///
/// This equals the multivariate index exactly when distinct margins never
/// upcross together in the limit; on processes where they do, the gap
/// between this route and the union runs route is the detection signal.
pub fn combine_marginal(reps: &[ReplicateCounts], nu: &[f64]) -> Result<Estimate> {
    check_nonempty(reps)?;
    let d = reps[0].d();
    if nu.len() != d {
        return Err(EstimatorError::RateDimensionMismatch {
            expected: d,
            got: nu.len(),
        });
    }
    if let Some((j, &v)) = nu.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(EstimatorError::BadWeight {
            margin: j,
            value: v,
        });
    }
    let totals: Vec<RunsCounts> = (0..d)
        .map(|j| {
            let mut t = RunsCounts::default();
            for rep in reps {
                t.merge(rep.runs_margin[j]);
            }
            t
        })
        .collect();
    let nu_sum: f64 = nu.iter().sum();
    let stat = |skip: Option<usize>| {
        let mut weighted = 0.0;
        for j in 0..d {
            let (mut num, mut den) = (totals[j].num, totals[j].den);
            if let Some(r) = skip {
                let c = reps[r].runs_margin[j];
                num -= c.num;
                den -= c.den;
            }
            weighted += nu[j] * ratio(num, den)?;
        }
        Some(weighted / nu_sum)
    };
    let events = totals.iter().map(|t| t.den).sum();
    match stat(None) {
        Some(value) => Ok(Estimate::index(
            value,
            jackknife_se(reps.len(), stat),
            events,
        )),
        None => Ok(Estimate::undefined(
            events,
            "some margin has no upcrossings in the anchor range",
        )),
    }
}

/// Blocks estimate of the upcrossings index: nonempty full blocks over
/// union marks in full blocks, the reciprocal of the empirical mean
/// cluster size. Always within (0, 1] when defined, since a nonempty
/// block holds at least one mark.
pub fn blocks_estimator(reps: &[ReplicateCounts]) -> Result<Estimate> {
    check_nonempty(reps)?;
    let nonempty: u64 = reps.iter().map(|r| r.nonempty_full_blocks).sum();
    let in_full: u64 = reps.iter().map(|r| r.union_in_full_blocks).sum();
    let stat = |skip: Option<usize>| {
        let (mut num, mut den) = (nonempty, in_full);
        if let Some(r) = skip {
            num -= reps[r].nonempty_full_blocks;
            den -= reps[r].union_in_full_blocks;
        }
        ratio(num, den)
    };
    Ok(match stat(None) {
        Some(value) => Estimate::index(value, jackknife_se(reps.len(), stat), nonempty),
        None => Estimate::undefined(0, "no nonempty blocks"),
    })
}

/// No-upcrossing probability estimate `exp(-n P(union mark at a time))`,
/// with the per-time probability pooled over all times and replicates.
pub fn phi_hat(reps: &[ReplicateCounts]) -> Result<Estimate> {
    check_nonempty(reps)?;
    let total: u64 = reps.iter().map(|r| r.union_marks).sum();
    let stat = |skip: Option<usize>| {
        let (mut marks, mut count) = (total, reps.len() as u64);
        if let Some(r) = skip {
            marks -= reps[r].union_marks;
            count -= 1;
        }
        Some((-(marks as f64) / count as f64).exp())
    };
    Ok(Estimate::index(
        stat(None).unwrap(),
        jackknife_se(reps.len(), stat),
        total,
    ))
}

/// Empirical union upcrossing rate `n P(union mark)` = mean union marks
/// per window.
pub fn nu_union_hat(reps: &[ReplicateCounts]) -> Result<Estimate> {
    check_nonempty(reps)?;
    Ok(mean_count(reps, |r| r.union_marks))
}

/// Empirical union exceedance rate = mean union exceedances per window.
pub fn tau_union_hat(reps: &[ReplicateCounts]) -> Result<Estimate> {
    check_nonempty(reps)?;
    Ok(mean_count(reps, |r| r.union_exceed))
}

/// Empirical margin upcrossing rate.
pub fn nu_hat(reps: &[ReplicateCounts], margin: usize) -> Result<Estimate> {
    check_nonempty(reps)?;
    Ok(mean_count(reps, |r| r.marks[margin]))
}

/// Empirical margin exceedance rate.
pub fn tau_hat(reps: &[ReplicateCounts], margin: usize) -> Result<Estimate> {
    check_nonempty(reps)?;
    Ok(mean_count(reps, |r| r.exceed[margin]))
}

fn mean_count<F>(reps: &[ReplicateCounts], select: F) -> Estimate
where
    F: Fn(&ReplicateCounts) -> u64,
{
    let total: u64 = reps.iter().map(&select).sum();
    let stat = |skip: Option<usize>| {
        let (mut sum, mut count) = (total, reps.len() as u64);
        if let Some(r) = skip {
            sum -= select(&reps[r]);
            count -= 1;
        }
        Some(sum as f64 / count as f64)
    };
    Estimate::rate(stat(None).unwrap(), jackknife_se(reps.len(), stat), total)
}

/// Limit of the no-exceedance probability of the associated independent
/// sequence, `exp(-tau_union)`. Uses the closed-form rate when the
/// process supplies one, else the empirical rate with a jackknife SE.
pub fn psi_hat(reps: &[ReplicateCounts], tau_union: Option<f64>) -> Result<Estimate> {
    check_nonempty(reps)?;
    let events: u64 = reps.iter().map(|r| r.union_exceed).sum();
    if let Some(tau) = tau_union {
        return Ok(
            Estimate::index((-tau).exp(), None, events).with_note("closed-form exceedance rate")
        );
    }
    let stat = |skip: Option<usize>| {
        let (mut sum, mut count) = (events, reps.len() as u64);
        if let Some(r) = skip {
            sum -= reps[r].union_exceed;
            count -= 1;
        }
        Some((-(sum as f64) / count as f64).exp())
    };
    Ok(Estimate::index(
        stat(None).unwrap(),
        jackknife_se(reps.len(), stat),
        events,
    ))
}

/// Empty-window estimate of the upcrossings index:
/// `log P(no union mark) / log phi`. One bit per window, so the highest
/// variance of the four routes, but it probes the defining limit itself
/// rather than a cluster characterization.
pub fn eta_empty(reps: &[ReplicateCounts]) -> Result<Estimate> {
    check_nonempty(reps)?;
    let total_reps = reps.len() as u64;
    let empty: u64 = reps.iter().filter(|r| r.is_empty_window()).count() as u64;
    let marks: u64 = reps.iter().map(|r| r.union_marks).sum();
    if empty == 0 || empty == total_reps {
        return Ok(Estimate::undefined(
            empty,
            format!("degenerate empty-window frequency: {empty} of {total_reps} windows empty"),
        ));
    }
    // empty < total_reps, so marks > 0 and log(phi) < 0 here
    let stat = |skip: Option<usize>| {
        let (mut e, mut m, mut count) = (empty, marks, total_reps);
        if let Some(r) = skip {
            e -= reps[r].is_empty_window() as u64;
            m -= reps[r].union_marks;
            count -= 1;
        }
        if e == 0 || e == count || m == 0 {
            return None;
        }
        let p0 = e as f64 / count as f64;
        let log_phi = -(m as f64) / count as f64;
        Some(p0.ln() / log_phi)
    };
    Ok(Estimate::index(
        stat(None).unwrap(),
        jackknife_se(reps.len(), stat),
        empty,
    ))
}

/// Direct extremal index estimate `log P(max below levels) / (-tau_union)`,
/// with the closed-form exceedance rate when available.
pub fn theta_direct(reps: &[ReplicateCounts], tau_union: Option<f64>) -> Result<Estimate> {
    check_nonempty(reps)?;
    let total_reps = reps.len() as u64;
    let below: u64 = reps.iter().filter(|r| r.max_below_levels()).count() as u64;
    let exceed: u64 = reps.iter().map(|r| r.union_exceed).sum();
    if below == 0 || below == total_reps {
        return Ok(Estimate::undefined(
            below,
            format!(
                "degenerate no-exceedance frequency: {below} of {total_reps} windows below levels"
            ),
        ));
    }
    let stat = |skip: Option<usize>| {
        let (mut b, mut x, mut count) = (below, exceed, total_reps);
        if let Some(r) = skip {
            b -= reps[r].max_below_levels() as u64;
            x -= reps[r].union_exceed;
            count -= 1;
        }
        if b == 0 || b == count {
            return None;
        }
        let tau = match tau_union {
            Some(t) => t,
            None => x as f64 / count as f64,
        };
        if tau <= 0.0 {
            return None;
        }
        Some((b as f64 / count as f64).ln() / -tau)
    };
    Ok(Estimate::index(
        stat(None).unwrap(),
        jackknife_se(reps.len(), stat),
        below,
    ))
}

/// Extremal index via the index relation: `eta * nu_union / tau_union`,
/// with the runs estimate for eta and closed-form rates when available.
/// Jackknifed jointly when any ingredient is empirical.
pub fn theta_from_eta(
    reps: &[ReplicateCounts],
    nu_union: Option<f64>,
    tau_union: Option<f64>,
) -> Result<Estimate> {
    check_nonempty(reps)?;
    let mut runs = RunsCounts::default();
    let (mut marks, mut exceed) = (0u64, 0u64);
    for rep in reps {
        runs.merge(rep.runs_union);
        marks += rep.union_marks;
        exceed += rep.union_exceed;
    }
    if tau_union.is_none() && exceed == 0 {
        return Err(EstimatorError::ZeroTauUnion);
    }
    if let Some(t) = tau_union {
        if t <= 0.0 {
            return Err(EstimatorError::ZeroTauUnion);
        }
    }
    let stat = |skip: Option<usize>| {
        let (mut rn, mut rd, mut m, mut x, mut count) =
            (runs.num, runs.den, marks, exceed, reps.len() as u64);
        if let Some(r) = skip {
            rn -= reps[r].runs_union.num;
            rd -= reps[r].runs_union.den;
            m -= reps[r].union_marks;
            x -= reps[r].union_exceed;
            count -= 1;
        }
        let eta = ratio(rn, rd)?;
        let nu = nu_union.unwrap_or(m as f64 / count as f64);
        let tau = tau_union.unwrap_or(x as f64 / count as f64);
        if tau <= 0.0 {
            return None;
        }
        Some(eta * nu / tau)
    };
    Ok(match stat(None) {
        Some(value) => Estimate::index(value, jackknife_se(reps.len(), stat), runs.den),
        None => Estimate::undefined(0, "no union upcrossings in the anchor range"),
    })
}

/// All index and rate estimates of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub eta_runs: Estimate,
    pub eta_marginal: Vec<Estimate>,
    pub eta_combined: Estimate,
    pub eta_blocks: Estimate,
    pub eta_empty: Estimate,
    pub theta_direct: Estimate,
    pub theta_from_eta: Estimate,
    pub phi_hat: Estimate,
    pub psi_hat: Estimate,
    pub nu_hat: Vec<Estimate>,
    pub tau_hat: Vec<Estimate>,
    pub nu_union_hat: Estimate,
    pub tau_union_hat: Estimate,
}

impl EstimateReport {
    /// Run every route on one pool of replicates. `nu` weights the
    /// marginal combination; the optional union rates switch the phi/psi
    /// and theta denominators to closed forms.
    pub fn from_replicates(
        reps: &[ReplicateCounts],
        nu: &[f64],
        nu_union: Option<f64>,
        tau_union: Option<f64>,
    ) -> Result<EstimateReport> {
        check_nonempty(reps)?;
        let d = reps[0].d();
        let eta_marginal = (0..d)
            .map(|j| runs_estimator_marginal(reps, j))
            .collect::<Result<Vec<_>>>()?;
        let theta_from_eta = match theta_from_eta(reps, nu_union, tau_union) {
            Ok(e) => e,
            Err(EstimatorError::ZeroTauUnion) => {
                Estimate::undefined(0, "union exceedance rate is zero")
            }
            Err(e) => return Err(e),
        };
        Ok(EstimateReport {
            eta_runs: runs_estimator_multivariate(reps)?,
            eta_marginal,
            eta_combined: combine_marginal(reps, nu)?,
            eta_blocks: blocks_estimator(reps)?,
            eta_empty: eta_empty(reps)?,
            theta_direct: theta_direct(reps, tau_union)?,
            theta_from_eta,
            phi_hat: phi_hat(reps)?,
            psi_hat: psi_hat(reps, tau_union)?,
            nu_hat: (0..d).map(|j| nu_hat(reps, j)).collect::<Result<_>>()?,
            tau_hat: (0..d).map(|j| tau_hat(reps, j)).collect::<Result<_>>()?,
            nu_union_hat: nu_union_hat(reps)?,
            tau_union_hat: tau_union_hat(reps)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(d: usize) -> ReplicateCounts {
        ReplicateCounts {
            n: 100,
            marks: vec![0; d],
            union_marks: 0,
            exceed: vec![0; d],
            union_exceed: 0,
            runs_union: RunsCounts::default(),
            runs_margin: vec![RunsCounts::default(); d],
            union_in_full_blocks: 0,
            nonempty_full_blocks: 0,
            total_full_blocks: 10,
        }
    }

    #[test]
    fn runs_estimator_pools_and_jackknifes() {
        let mut a = rep(1);
        a.runs_union = RunsCounts { num: 1, den: 1 };
        let mut b = rep(1);
        b.runs_union = RunsCounts { num: 1, den: 3 };
        let est = runs_estimator_multivariate(&[a, b]).unwrap();
        assert_eq!(est.value, Some(0.5));
        assert_eq!(est.events, 4);
        // leave-outs 1/3 and 1: SE = sqrt(1/2 * ((1/3-2/3)^2 + (1-2/3)^2))
        assert!((est.std_error.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(!est.out_of_range);
    }

    #[test]
    fn zero_denominator_is_undefined_not_error() {
        let est = runs_estimator_multivariate(&[rep(1), rep(1)]).unwrap();
        assert!(!est.is_defined());
        assert!(est.note.as_deref().unwrap().contains("union upcrossings"));
        assert!(runs_estimator_multivariate(&[]).is_err());
    }

    #[test]
    fn combination_matches_hand_values() {
        // margin ratios 1/2 and 1/1
        let mut a = rep(2);
        a.runs_margin = vec![RunsCounts { num: 1, den: 2 }, RunsCounts { num: 1, den: 1 }];
        let reps = [a];
        let est = combine_marginal(&reps, &[2.0, 1.0]).unwrap();
        assert!((est.value.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let est = combine_marginal(&reps, &[2.0, 2.0]).unwrap();
        assert!((est.value.unwrap() - 0.75).abs() < 1e-12);

        // equal marginal indices combine to themselves under any weights
        let mut b = rep(2);
        b.runs_margin = vec![RunsCounts { num: 3, den: 3 }, RunsCounts { num: 2, den: 2 }];
        let est = combine_marginal(&[b], &[0.3, 7.0]).unwrap();
        assert_eq!(est.value, Some(1.0));
    }

    #[test]
    fn combination_rejects_bad_weights() {
        let mut a = rep(2);
        a.runs_margin = vec![RunsCounts { num: 1, den: 1 }; 2];
        assert!(matches!(
            combine_marginal(&[a.clone()], &[1.0, 0.0]),
            Err(EstimatorError::BadWeight { margin: 1, .. })
        ));
        assert!(matches!(
            combine_marginal(&[a.clone()], &[1.0, -2.0]),
            Err(EstimatorError::BadWeight { margin: 1, .. })
        ));
        assert!(matches!(
            combine_marginal(&[a], &[1.0]),
            Err(EstimatorError::RateDimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn blocks_estimator_is_reciprocal_mean_cluster_size() {
        // every nonempty block holds exactly 2 marks
        let mut a = rep(1);
        a.nonempty_full_blocks = 3;
        a.union_in_full_blocks = 6;
        let est = blocks_estimator(&[a]).unwrap();
        assert_eq!(est.value, Some(0.5));

        // singleton clusters
        let mut b = rep(1);
        b.nonempty_full_blocks = 4;
        b.union_in_full_blocks = 4;
        let est = blocks_estimator(&[b]).unwrap();
        assert_eq!(est.value, Some(1.0));

        let est = blocks_estimator(&[rep(1)]).unwrap();
        assert!(!est.is_defined());
    }

    #[test]
    fn phi_hat_is_one_without_marks_and_decays_with_rate() {
        let est = phi_hat(&[rep(1), rep(1)]).unwrap();
        assert_eq!(est.value, Some(1.0));

        let mut a = rep(1);
        a.union_marks = 3;
        let mut b = rep(1);
        b.union_marks = 3;
        let est = phi_hat(&[a, b]).unwrap();
        assert!((est.value.unwrap() - (-3.0f64).exp()).abs() < 1e-12);
        assert_eq!(est.events, 6);
    }

    #[test]
    fn eta_empty_matches_the_log_ratio_and_flags_excess() {
        // 9 windows with one mark, 1 empty: P0 = 0.1, phi = exp(-0.9)
        let mut reps = Vec::new();
        for _ in 0..9 {
            let mut r = rep(1);
            r.union_marks = 1;
            reps.push(r);
        }
        reps.push(rep(1));
        let est = eta_empty(&reps).unwrap();
        let expect = 0.1f64.ln() / -0.9;
        assert!((est.value.unwrap() - expect).abs() < 1e-12);
        assert!(expect > 1.0);
        assert!(est.out_of_range, "index above 1 must be flagged");
        assert_eq!(est.events, 1);
    }

    #[test]
    fn eta_empty_degenerate_frequencies_are_undefined_with_counts() {
        let est = eta_empty(&[rep(1), rep(1)]).unwrap();
        assert!(!est.is_defined());
        assert!(est.note.as_deref().unwrap().contains("2 of 2"));

        let mut a = rep(1);
        a.union_marks = 2;
        let mut b = rep(1);
        b.union_marks = 1;
        let est = eta_empty(&[a, b]).unwrap();
        assert!(!est.is_defined());
        assert!(est.note.as_deref().unwrap().contains("0 of 2"));
    }

    #[test]
    fn theta_direct_uses_closed_rate_when_given() {
        // 1 of 2 windows below levels, closed-form tau_union = ln 2
        let mut a = rep(1);
        a.union_exceed = 5;
        let b = rep(1);
        let est = theta_direct(&[a, b], Some(2.0f64.ln())).unwrap();
        assert!((est.value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(est.events, 1);

        // empirical rate: tau = 5/2, theta = ln(1/2)/-(5/2)
        let mut a = rep(1);
        a.union_exceed = 5;
        let est = theta_direct(&[a, rep(1)], None).unwrap();
        assert!((est.value.unwrap() - 0.5f64.ln() / -2.5).abs() < 1e-12);
    }

    #[test]
    fn theta_from_eta_divides_the_rates() {
        let mut a = rep(1);
        a.runs_union = RunsCounts { num: 2, den: 3 };
        a.union_marks = 3;
        a.union_exceed = 4;
        let est = theta_from_eta(&[a.clone()], Some(3.0), Some(4.0)).unwrap();
        assert!((est.value.unwrap() - 0.5).abs() < 1e-12);

        // empirical rates give the same value here
        let est = theta_from_eta(&[a.clone()], None, None).unwrap();
        assert!((est.value.unwrap() - 0.5).abs() < 1e-12);

        // eta = 1 and equal rates give 1
        let mut b = rep(1);
        b.runs_union = RunsCounts { num: 2, den: 2 };
        b.union_marks = 2;
        b.union_exceed = 2;
        let est = theta_from_eta(&[b], None, None).unwrap();
        assert_eq!(est.value, Some(1.0));

        assert!(matches!(
            theta_from_eta(&[rep(1)], Some(1.0), None),
            Err(EstimatorError::ZeroTauUnion)
        ));
    }

    #[test]
    fn rate_estimates_average_counts() {
        let mut a = rep(2);
        a.marks = vec![2, 1];
        a.union_marks = 3;
        a.exceed = vec![4, 1];
        a.union_exceed = 5;
        let mut b = rep(2);
        b.marks = vec![0, 1];
        b.union_marks = 1;
        b.exceed = vec![2, 1];
        b.union_exceed = 3;
        let reps = [a, b];
        assert_eq!(nu_hat(&reps, 0).unwrap().value, Some(1.0));
        assert_eq!(nu_hat(&reps, 1).unwrap().value, Some(1.0));
        assert_eq!(nu_union_hat(&reps).unwrap().value, Some(2.0));
        assert_eq!(tau_hat(&reps, 0).unwrap().value, Some(3.0));
        assert_eq!(tau_union_hat(&reps).unwrap().value, Some(4.0));
        let psi = psi_hat(&reps, None).unwrap();
        assert!((psi.value.unwrap() - (-4.0f64).exp()).abs() < 1e-12);
        let psi = psi_hat(&reps, Some(1.0)).unwrap();
        assert!((psi.value.unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(psi.std_error, None);
    }

    #[test]
    fn full_report_runs_every_route() {
        let mut a = rep(2);
        a.marks = vec![2, 1];
        a.union_marks = 3;
        a.exceed = vec![3, 1];
        a.union_exceed = 4;
        a.runs_union = RunsCounts { num: 2, den: 3 };
        a.runs_margin = vec![RunsCounts { num: 1, den: 2 }, RunsCounts { num: 1, den: 1 }];
        a.union_in_full_blocks = 3;
        a.nonempty_full_blocks = 2;
        let b = rep(2);
        let report = EstimateReport::from_replicates(&[a, b], &[2.0, 1.0], None, None).unwrap();
        assert!(report.eta_runs.is_defined());
        assert!(report.eta_combined.is_defined());
        assert!(report.eta_blocks.is_defined());
        assert!(report.eta_empty.is_defined());
        assert!(report.theta_direct.is_defined());
        assert!(report.theta_from_eta.is_defined());
        assert_eq!(report.eta_marginal.len(), 2);
        assert_eq!(report.nu_hat.len(), 2);
        // blocks route: 2 nonempty blocks, 3 marks
        assert!((report.eta_blocks.value.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_serializes_round_trip() {
        let mut a = rep(1);
        a.union_marks = 1;
        a.marks = vec![1];
        a.exceed = vec![1];
        a.union_exceed = 1;
        a.runs_union = RunsCounts { num: 1, den: 1 };
        a.runs_margin = vec![RunsCounts { num: 1, den: 1 }];
        a.union_in_full_blocks = 1;
        a.nonempty_full_blocks = 1;
        let mut b = rep(1);
        b.union_exceed = 1;
        let report = EstimateReport::from_replicates(&[a, b], &[1.0], None, None).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: EstimateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
