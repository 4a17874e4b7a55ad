//! Level calibration and the closed-form rates it induces.
//!
//! Levels are parametrized by a normalized per-margin tail rate `tau'`:
//! margin `j` of a window of length `n` uses `u_j = 1 - tau'_j / n`, so one
//! innovation exceeds `u_j` with probability `tau'_j / n` exactly.
//!
//! For a moving-maximum margin with lag set `L_j` this calibration gives
//! closed-form limits for the two per-margin mean measures:
//!
//! * exceedances: `tau_j = |L_j| * tau'_j`, because the margin exceeds its
//!   level whenever any of its `|L_j|` distinct innovations does;
//! * upcrossings: `nu_j = runs(L_j) * tau'_j`, where `runs(L_j)` counts the
//!   maximal runs of consecutive integers in `{-l : l in L_j}`. A single
//!   high innovation at time `t` lifts the margin above its level exactly
//!   at the times `{t - l}`, and each gap in that set starts one more
//!   upcrossing; interactions between two high innovations are O(1/n).
//!
//! Union rates (over margins) are stored only where a closed form is known:
//! the built-in two-margin processes and the identical-margins case.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{BuiltinKind, ProcessSpec};

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("tau_prime must have one entry per margin: got {got}, process has {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("tau_prime[{margin}] = {value} must be positive and finite")]
    BadRate { margin: usize, value: f64 },
    #[error("tau_prime[{margin}] = {value} needs window length above {value}, got n = {n}")]
    LevelNotHigh { margin: usize, value: f64, n: usize },
    #[error("scaling constant c = {c} must be positive and finite")]
    BadScale { c: f64 },
    #[error("floor(n/c) = {m} is too short a calibration length (need at least 2)")]
    ScaledWindowTooShort { m: usize },
}

pub type Result<T> = std::result::Result<T, LevelError>;

/// Per-margin levels calibrated for windows of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelVector {
    n: usize,
    u: Vec<f64>,
}

impl LevelVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self, margin: usize) -> f64 {
        self.u[margin]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }
}

/// Closed-form rate summary for a process at a given `tau'` vector.
///
/// `nu_union` / `tau_union` are the limits of `n P(some margin upcrosses)` /
/// `n P(some margin exceeds)` and are populated only when a closed form is
/// known for the lag pattern; estimators fall back to empirical rates when
/// they are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub tau_prime: Vec<f64>,
    pub tau: Vec<f64>,
    pub nu: Vec<f64>,
    pub nu_union: Option<f64>,
    pub tau_union: Option<f64>,
}

/// Number of maximal runs of consecutive integers in `{-l : l in lags}`:
/// the upcrossings one high innovation starts in this margin.
pub fn lag_run_count(lags: &[i64]) -> usize {
    let mut offsets: Vec<i64> = lags.iter().map(|l| -l).collect();
    offsets.sort_unstable();
    let mut runs = 0;
    let mut prev: Option<i64> = None;
    for o in offsets {
        if prev != Some(o - 1) {
            runs += 1;
        }
        prev = Some(o);
    }
    runs
}

fn validate_tau_prime(spec: &ProcessSpec, tau_prime: &[f64]) -> Result<()> {
    if tau_prime.len() != spec.d() {
        return Err(LevelError::DimensionMismatch {
            got: tau_prime.len(),
            expected: spec.d(),
        });
    }
    for (margin, &v) in tau_prime.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(LevelError::BadRate { margin, value: v });
        }
    }
    Ok(())
}

/// Levels `u_j = 1 - tau'_j / n` for windows of length `n`.
pub fn levels_from_tau_prime(
    spec: &ProcessSpec,
    tau_prime: &[f64],
    n: usize,
) -> Result<LevelVector> {
    validate_tau_prime(spec, tau_prime)?;
    let mut u = Vec::with_capacity(tau_prime.len());
    for (margin, &v) in tau_prime.iter().enumerate() {
        if v >= n as f64 {
            return Err(LevelError::LevelNotHigh {
                margin,
                value: v,
                n,
            });
        }
        u.push(1.0 - v / n as f64);
    }
    Ok(LevelVector { n, u })
}

/// Levels calibrated for length `floor(n/c)` but intended for windows of
/// length `n`: applying them multiplies every mean measure by `c` while
/// leaving cluster-size distributions unchanged.
pub fn scaled_levels(
    spec: &ProcessSpec,
    tau_prime: &[f64],
    n: usize,
    c: f64,
) -> Result<LevelVector> {
    if !(c.is_finite() && c > 0.0) {
        return Err(LevelError::BadScale { c });
    }
    let m = (n as f64 / c).floor() as usize;
    if m < 2 {
        return Err(LevelError::ScaledWindowTooShort { m });
    }
    let calibrated = levels_from_tau_prime(spec, tau_prime, m)?;
    Ok(LevelVector { n, u: calibrated.u })
}

/// Closed-form per-margin rates, plus union rates where known.
pub fn limiting_rates(spec: &ProcessSpec, tau_prime: &[f64]) -> Result<RateSummary> {
    validate_tau_prime(spec, tau_prime)?;
    let tau: Vec<f64> = spec
        .lags()
        .iter()
        .zip(tau_prime)
        .map(|(l, tp)| l.len() as f64 * tp)
        .collect();
    let nu: Vec<f64> = spec
        .lags()
        .iter()
        .zip(tau_prime)
        .map(|(l, tp)| lag_run_count(l) as f64 * tp)
        .collect();
    let (nu_union, tau_union) = match spec.builtin_kind() {
        // margins never share an innovation within one time step, so the
        // union rates are the sums
        Some(BuiltinKind::Ex61) => (Some(nu[0] + nu[1]), Some(tau[0] + tau[1])),
        // margin 2 rides inside margin 1's innovations; the union upcrossing
        // rate depends on which level is higher
        Some(BuiltinKind::Ex62) => {
            let nu_union = if 2.0 * nu[1] >= nu[0] {
                nu[0] / 2.0 + nu[1]
            } else {
                nu[0]
            };
            (Some(nu_union), None)
        }
        // identical margins: the union event is the margin with the lowest
        // level, i.e. the largest rate
        Some(BuiltinKind::Iid) => (
            Some(nu.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            Some(tau.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ),
        None => (None, None),
    };
    Ok(RateSummary {
        tau_prime: tau_prime.to_vec(),
        tau,
        nu,
        nu_union,
        tau_union,
    })
}

/// Invert `nu_j = runs(L_j) * tau'_j` to choose `tau'` hitting a target
/// upcrossing-rate vector.
pub fn tau_prime_for_nu(spec: &ProcessSpec, nu: &[f64]) -> Result<Vec<f64>> {
    if nu.len() != spec.d() {
        return Err(LevelError::DimensionMismatch {
            got: nu.len(),
            expected: spec.d(),
        });
    }
    for (margin, &v) in nu.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(LevelError::BadRate { margin, value: v });
        }
    }
    Ok(spec
        .lags()
        .iter()
        .zip(nu)
        .map(|(l, target)| target / lag_run_count(l) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{builtin_process, make_process};
    use crate::oracle::{exact_prob, upcrossing_event};

    #[test]
    fn level_definition_matches_stated_example() {
        let spec = builtin_process("iid", None).unwrap();
        let lv = levels_from_tau_prime(&spec, &[2.0], 1000).unwrap();
        assert_eq!(lv.u(0), 0.998);
        // n (1 - u) returns tau' up to float rounding
        assert!((1000.0 * (1.0 - lv.u(0)) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bad_rates_are_rejected() {
        let spec = builtin_process("ex61", None).unwrap();
        assert!(matches!(
            levels_from_tau_prime(&spec, &[1.0], 100),
            Err(LevelError::DimensionMismatch {
                got: 1,
                expected: 2
            })
        ));
        assert!(matches!(
            levels_from_tau_prime(&spec, &[0.0, 1.0], 100),
            Err(LevelError::BadRate { margin: 0, .. })
        ));
        assert!(matches!(
            levels_from_tau_prime(&spec, &[1.0, 150.0], 100),
            Err(LevelError::LevelNotHigh { margin: 1, .. })
        ));
    }

    #[test]
    fn run_counting_over_negated_lags() {
        assert_eq!(lag_run_count(&[0, -2, -3]), 2); // {0, 2, 3}
        assert_eq!(lag_run_count(&[0, -1, -2]), 1); // {0, 1, 2}
        assert_eq!(lag_run_count(&[1]), 1); // {-1}
        assert_eq!(lag_run_count(&[0, -2, -4]), 3); // {0, 2, 4}
        assert_eq!(lag_run_count(&[0]), 1);
    }

    #[test]
    fn ex61_rates_match_lag_structure() {
        let spec = builtin_process("ex61", None).unwrap();
        let r = limiting_rates(&spec, &[1.0, 1.0]).unwrap();
        assert_eq!(r.tau, vec![3.0, 1.0]);
        assert_eq!(r.nu, vec![2.0, 1.0]);
        assert_eq!(r.nu_union, Some(3.0));
        assert_eq!(r.tau_union, Some(4.0));
    }

    #[test]
    fn ex62_union_rate_is_piecewise_in_the_level_order() {
        let spec = builtin_process("ex62", None).unwrap();
        // tau' = (1, 2): nu = (2, 2), 2 nu2 >= nu1 -> nu1/2 + nu2 = 3
        let high = limiting_rates(&spec, &[1.0, 2.0]).unwrap();
        assert_eq!(high.nu, vec![2.0, 2.0]);
        assert_eq!(high.nu_union, Some(3.0));
        assert_eq!(high.tau_union, None);
        // tau' = (2, 1): nu = (4, 1), 2 nu2 < nu1 -> nu1 = 4
        let low = limiting_rates(&spec, &[2.0, 1.0]).unwrap();
        assert_eq!(low.nu_union, Some(4.0));
        // boundary 2 nu2 = nu1: both branches agree
        let edge = limiting_rates(&spec, &[1.0, 1.0]).unwrap();
        assert_eq!(edge.nu_union, Some(2.0));
    }

    #[test]
    fn iid_union_rates_take_the_largest_margin() {
        let spec = builtin_process("iid", Some(3)).unwrap();
        let r = limiting_rates(&spec, &[0.5, 2.0, 1.0]).unwrap();
        assert_eq!(r.nu_union, Some(2.0));
        assert_eq!(r.tau_union, Some(2.0));
    }

    #[test]
    fn custom_processes_get_margin_rates_but_no_union_closed_form() {
        let spec = make_process(vec![vec![0, -1, -2], vec![5]]).unwrap();
        let r = limiting_rates(&spec, &[1.5, 0.5]).unwrap();
        assert_eq!(r.tau, vec![4.5, 0.5]);
        assert_eq!(r.nu, vec![1.5, 0.5]);
        assert_eq!(r.nu_union, None);
        assert_eq!(r.tau_union, None);
    }

    #[test]
    fn single_run_lag_set_rate_confirmed_by_exact_upcrossing_probability() {
        // {0,-1,-2} has one run, so n P(upcrossing) -> 1 * tau'. The exact
        // probability is u^3 (1 - u) with u = 1 - tau'/n, so the gap to the
        // limit shrinks like 4 tau'^2 / n.
        let spec = make_process(vec![vec![0, -1, -2]]).unwrap();
        let tau_prime = 1.0;
        let r = limiting_rates(&spec, &[tau_prime]).unwrap();
        assert_eq!(r.nu, vec![1.0]);
        for n in [100usize, 1_000, 10_000] {
            let lv = levels_from_tau_prime(&spec, &[tau_prime], n).unwrap();
            let p = exact_prob(&upcrossing_event(&spec, 0, 5, lv.u(0))).unwrap();
            let gap = (n as f64 * p - r.nu[0]).abs();
            assert!(
                gap <= 4.0 * tau_prime * tau_prime / n as f64,
                "n={n} gap={gap}"
            );
        }
    }

    #[test]
    fn scaled_levels_recalibrate_to_the_shorter_window() {
        let spec = builtin_process("iid", None).unwrap();
        let base = levels_from_tau_prime(&spec, &[1.0], 10).unwrap();
        let same = scaled_levels(&spec, &[1.0], 10, 1.0).unwrap();
        assert_eq!(base, same);
        let doubled = scaled_levels(&spec, &[1.0], 10, 2.0).unwrap();
        assert_eq!(doubled.n(), 10);
        assert_eq!(doubled.u(0), 1.0 - 1.0 / 5.0);
        assert!(matches!(
            scaled_levels(&spec, &[1.0], 10, 8.0),
            Err(LevelError::ScaledWindowTooShort { m: 1 })
        ));
        assert!(matches!(
            scaled_levels(&spec, &[1.0], 10, 0.0),
            Err(LevelError::BadScale { .. })
        ));
    }

    #[test]
    fn nu_targets_invert_to_tau_prime() {
        let spec = builtin_process("ex61", None).unwrap();
        let tp = tau_prime_for_nu(&spec, &[2.0, 1.0]).unwrap();
        assert_eq!(tp, vec![1.0, 1.0]);
        let r = limiting_rates(&spec, &tp).unwrap();
        assert_eq!(r.nu, vec![2.0, 1.0]);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn prop_levels_lie_in_unit_interval_and_decrease_in_tau_prime(
                tp in 0.01f64..50.0,
                bump in 0.01f64..10.0,
                n in 100usize..100_000,
            ) {
                let spec = builtin_process("iid", None).unwrap();
                let a = levels_from_tau_prime(&spec, &[tp], n).unwrap();
                let b = levels_from_tau_prime(&spec, &[tp + bump], n).unwrap();
                prop_assert!(a.u(0) > 0.0 && a.u(0) < 1.0);
                prop_assert!(b.u(0) < a.u(0));
            }

            #[test]
            fn prop_run_count_bounded_by_lag_count(lags in proptest::collection::vec(-8i64..8, 1..8)) {
                let spec = make_process(vec![lags]).unwrap();
                let runs = lag_run_count(spec.lag_set(0));
                prop_assert!(runs >= 1);
                prop_assert!(runs <= spec.lag_set(0).len());
            }
        }
    }
}
