//! Closed-form limiting values for the built-in processes.
//!
//! Each built-in has known limits for the indices, the no-upcrossing
//! probability, and the cluster multiplicity distribution, all as
//! functions of the target rate vector. The harness attaches them to
//! reports as targets, and the acceptance suite compares estimates
//! against them. Custom lag-set processes get no targets: their limits
//! are whatever the estimators say, cross-checked only by the oracle at
//! small n.
//!
//! The two-margin moving-maximum built-ins cluster as follows. A single
//! high innovation produces, per margin, one upcrossing at the entry of
//! each maximal run of its (negated) lag set. For the first built-in the
//! margins are driven by disjoint innovations at any fixed time, so union
//! clusters are per-margin clusters: count vectors (2,0) and (0,1). For
//! the second, one margin is the driving innovation itself, so a high
//! innovation marks both margins at the same time; vectors (2,1), (2,0)
//! and (0,1) appear, with the regime boundary at nu_1 = 2 nu_2 governing
//! which margin's level is lower.

use serde::{Deserialize, Serialize};

use crate::generators::{BuiltinKind, ProcessSpec};
use crate::levels::RateSummary;

/// Limiting probability of one multiplicity count vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityTarget {
    pub counts: Vec<u32>,
    pub probability: f64,
}

/// Limiting probability of one union cluster size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSizeTarget {
    pub size: u32,
    pub probability: f64,
}

/// Closed-form limits for a process at a given rate vector; every field
/// is absent when no closed form is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitValues {
    /// The upcrossings index.
    pub eta: Option<f64>,
    /// What the marginal-combination formula converges to. Coincides
    /// with `eta` exactly when cross-margin upcrossings vanish.
    pub eta_combined: Option<f64>,
    pub eta_marginal: Option<Vec<f64>>,
    /// The extremal index.
    pub theta: Option<f64>,
    /// Limiting no-upcrossing base probability, exp(-nu_union).
    pub phi: Option<f64>,
    /// Limiting no-exceedance probability of the associated independent
    /// sequence, exp(-tau_union).
    pub psi: Option<f64>,
    /// Mean union cluster size, 1/eta.
    pub mean_cluster_size: Option<f64>,
    pub multiplicity: Option<Vec<MultiplicityTarget>>,
    pub cluster_sizes: Option<Vec<ClusterSizeTarget>>,
}

impl LimitValues {
    /// No closed forms known.
    pub fn none() -> Self {
        LimitValues {
            eta: None,
            eta_combined: None,
            eta_marginal: None,
            theta: None,
            phi: None,
            psi: None,
            mean_cluster_size: None,
            multiplicity: None,
            cluster_sizes: None,
        }
    }

    /// Closed-form limits for `spec` at the rates in `rates`.
    pub fn for_process(spec: &ProcessSpec, rates: &RateSummary) -> Self {
        match spec.builtin_kind() {
            Some(BuiltinKind::Iid) => iid_limits(rates),
            Some(BuiltinKind::Ex61) => ex61_limits(rates),
            Some(BuiltinKind::Ex62) => ex62_limits(rates),
            None => LimitValues::none(),
        }
    }
}

fn iid_limits(rates: &RateSummary) -> LimitValues {
    let d = rates.nu.len();
    // multiplicity limits are only stated for one margin; with several
    // margins on the same innovation stream the vector depends on level
    // ordering and is deliberately left out
    let single = d == 1;
    LimitValues {
        eta: Some(1.0),
        eta_combined: Some(1.0),
        eta_marginal: Some(vec![1.0; d]),
        theta: Some(1.0),
        phi: rates.nu_union.map(|nu| (-nu).exp()),
        psi: rates.tau_union.map(|tau| (-tau).exp()),
        mean_cluster_size: Some(1.0),
        multiplicity: single.then(|| {
            vec![MultiplicityTarget {
                counts: vec![1],
                probability: 1.0,
            }]
        }),
        cluster_sizes: single.then(|| {
            vec![ClusterSizeTarget {
                size: 1,
                probability: 1.0,
            }]
        }),
    }
}

fn ex61_limits(rates: &RateSummary) -> LimitValues {
    let (nu1, nu2) = (rates.nu[0], rates.nu[1]);
    let (tau1, tau2) = (rates.tau[0], rates.tau[1]);
    let eta = (nu1 / 2.0 + nu2) / (nu1 + nu2);
    let theta = (tau1 / 3.0 + tau2) / (tau1 + tau2);
    let cluster_mass_2 = (nu1 / 2.0) / (nu1 / 2.0 + nu2);
    let cluster_mass_1 = nu2 / (nu1 / 2.0 + nu2);
    LimitValues {
        eta: Some(eta),
        eta_combined: Some(eta),
        eta_marginal: Some(vec![0.5, 1.0]),
        theta: Some(theta),
        phi: rates.nu_union.map(|nu| (-nu).exp()),
        psi: rates.tau_union.map(|tau| (-tau).exp()),
        mean_cluster_size: Some(1.0 / eta),
        multiplicity: Some(vec![
            MultiplicityTarget {
                counts: vec![2, 0],
                probability: cluster_mass_2,
            },
            MultiplicityTarget {
                counts: vec![0, 1],
                probability: cluster_mass_1,
            },
        ]),
        cluster_sizes: Some(vec![
            ClusterSizeTarget {
                size: 1,
                probability: cluster_mass_1,
            },
            ClusterSizeTarget {
                size: 2,
                probability: cluster_mass_2,
            },
        ]),
    }
}

fn ex62_limits(rates: &RateSummary) -> LimitValues {
    let (nu1, nu2) = (rates.nu[0], rates.nu[1]);
    let half = nu1 / 2.0;
    // upper regime: the pure-innovation margin has the lower level, so
    // every high innovation marks it and cluster anatomy follows it
    let upper = 2.0 * nu2 >= nu1;
    let eta = if upper { nu2 / (half + nu2) } else { 0.5 };
    let (pi_21, pi_20, pi_01) = if upper {
        (half / nu2, 0.0, (nu2 - half) / nu2)
    } else {
        (nu2 / half, (half - nu2) / half, 0.0)
    };
    LimitValues {
        eta: Some(eta),
        eta_combined: Some((half + nu2) / (nu1 + nu2)),
        eta_marginal: Some(vec![0.5, 1.0]),
        theta: None,
        phi: rates.nu_union.map(|nu| (-nu).exp()),
        psi: rates.tau_union.map(|tau| (-tau).exp()),
        mean_cluster_size: Some(1.0 / eta),
        multiplicity: Some(vec![
            MultiplicityTarget {
                counts: vec![2, 1],
                probability: pi_21,
            },
            MultiplicityTarget {
                counts: vec![2, 0],
                probability: pi_20,
            },
            MultiplicityTarget {
                counts: vec![0, 1],
                probability: pi_01,
            },
        ]),
        // the (2,1) vector has union size 2: both margins mark the same
        // time on cluster entry
        cluster_sizes: Some(vec![
            ClusterSizeTarget {
                size: 1,
                probability: pi_01,
            },
            ClusterSizeTarget {
                size: 2,
                probability: pi_21 + pi_20,
            },
        ]),
    }
}
