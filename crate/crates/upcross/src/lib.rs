//! Simulation and estimation toolkit for upcrossing clustering in
//! multivariate stationary sequences.
//!
//! A d-margin moving-maximum process is observed through a window of length
//! `n` and a vector of high levels, one per margin. The objects of interest
//! are the point process of *upcrossings* (times `i` where a margin sits at
//! or below its level and the next observation exceeds it), the clustering
//! of those upcrossings, and the indices that summarize the clustering:
//!
//! * the upcrossings index `eta` (reciprocal limiting mean cluster size of
//!   the union upcrossing process),
//! * the extremal index `theta` (exceedance clustering of the running
//!   maximum), and
//! * the no-upcrossing probability `phi` that connects them.
//!
//! The crate is organized bottom-up:
//!
//! * [`generators`] — seeded window generation for moving-maximum processes
//!   over i.i.d. Uniform(0,1) innovations;
//! * [`levels`] — level calibration from per-margin normalized tail rates
//!   and the closed-form upcrossing/exceedance rates they induce;
//! * [`oracle`] — exact probabilities of finite boolean events over the
//!   innovations, used as the ground truth for everything Monte Carlo;
//! * [`pointproc`] — upcrossing/exceedance marks, block partitions, and
//!   cluster multiplicity histograms;
//! * [`estimators`] — runs, blocks, empty-window, and combination
//!   estimators with jackknife standard errors;
//! * [`diagnostics`] — finite-sample checks of the asymptotic assumptions
//!   (cross-margin dependence, local oscillation, scale equivariance,
//!   continuity in the level vector);
//! * [`limits`] — closed-form limiting values for the built-in processes;
//! * [`harness`] — config-driven experiment runner with deterministic
//!   replicate fan-out and JSON/CSV report emission.
//!
//! Determinism contract: every simulation consumes a master seed; replicate
//! `r` uses a seed derived by a fixed splitting rule, so results are
//! bit-identical for a given config regardless of worker count.

pub mod diagnostics;
pub mod estimators;
pub mod generators;
pub mod harness;
pub mod levels;
pub mod limits;
pub mod oracle;
pub mod pointproc;
pub(crate) mod sim;

pub use estimators::{Estimate, EstimateReport};
pub use generators::{builtin_process, generate_window, make_process, ProcessSpec, SamplePath};
pub use harness::{run_experiment, ExperimentConfig, RunReport};
pub use levels::{levels_from_tau_prime, limiting_rates, LevelVector, RateSummary};
pub use oracle::{exact_prob, EventExpr};
