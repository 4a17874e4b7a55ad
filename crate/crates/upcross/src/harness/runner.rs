//! The experiment pipeline: windows in, pooled report out.

use std::time::Instant;

use super::config::{DiagnoseConfig, ExperimentConfig};
use super::report::{target_rows, DiagnoseReport, ProcessSummary, RunReport};
use super::Result;
use crate::diagnostics::{
    continuity_check, h_sum, local_osc, scaling_check, window_diagnostics, ConditionReport,
    GridPoint,
};
use crate::estimators::{EstimateReport, ReplicateCounts};
use crate::generators::{generate_window, make_process, SeedRecord};
use crate::levels::{levels_from_tau_prime, limiting_rates};
use crate::limits::LimitValues;
use crate::pointproc::{
    block_count_vectors, mark_exceedances, mark_upcrossings, union_block_sizes, BlockCounts,
    ClusterSizeAccumulator, MultiplicityAccumulator,
};
use crate::sim::map_replicates;

struct WindowBundle {
    counts: ReplicateCounts,
    blocks: BlockCounts,
    union_sizes: Vec<u32>,
    h_weighted: f64,
    i1_pairs: u64,
    local_osc_count: u64,
}

/// Run one experiment: simulate the replicated windows, pool the counts,
/// estimate every route, and attach targets and in-run diagnostics.
///
/// Deterministic given the config: the worker count changes nothing but
/// wall-clock time. Degenerate estimates come back as undefined values
/// inside the report, never as errors.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let spec = config.process_spec()?;
    config.validate(&spec)?;
    let n = config.n;
    let levels = levels_from_tau_prime(&spec, &config.tau_prime, n)?;
    let rates = limiting_rates(&spec, &config.tau_prime)?;
    let scheme = config.blocks.scheme(n)?;
    let limits = LimitValues::for_process(&spec, &rates);
    let seed = config.seed;

    let bundles: Vec<WindowBundle> = map_replicates(config.replicates, config.workers, |rep| {
        let path = generate_window(&spec, n, SeedRecord::derive(seed, rep))
            .expect("window length was validated");
        let marks =
            mark_upcrossings(&path, &levels).expect("levels were calibrated for this process");
        let exceeds =
            mark_exceedances(&path, &levels).expect("levels were calibrated for this process");
        let diag = window_diagnostics(&marks, &scheme);
        WindowBundle {
            counts: ReplicateCounts::collect(&marks, &exceeds, &scheme),
            blocks: block_count_vectors(&marks, &scheme),
            union_sizes: union_block_sizes(&marks, &scheme),
            h_weighted: diag.h.weighted,
            i1_pairs: diag.h.i1_pairs,
            local_osc_count: diag.local_osc_count,
        }
    });

    // fold in replicate order; the histogram accumulators are integer
    // maps, so the order is immaterial for them but fixed anyway
    let r = scheme.r();
    let osc_anchors = (n - r + 1) as f64;
    let mut multiplicity_acc = MultiplicityAccumulator::default();
    let mut size_acc = ClusterSizeAccumulator::default();
    let mut reps = Vec::with_capacity(bundles.len());
    let mut h_values = Vec::with_capacity(bundles.len());
    let mut i1_values = Vec::with_capacity(bundles.len());
    let mut osc_values = Vec::with_capacity(bundles.len());
    for bundle in bundles {
        multiplicity_acc.add_window(&bundle.blocks);
        for &size in &bundle.union_sizes {
            size_acc.add_union_size(size);
        }
        h_values.push(bundle.h_weighted);
        i1_values.push(bundle.i1_pairs as f64);
        osc_values.push(n as f64 * bundle.local_osc_count as f64 / osc_anchors);
        reps.push(bundle.counts);
    }
    let multiplicity = multiplicity_acc.finalize();
    let cluster_sizes = size_acc.finalize();
    let marginal_cluster_sizes = (0..spec.d()).map(|j| multiplicity.marginal(j)).collect();

    let estimates =
        EstimateReport::from_replicates(&reps, &rates.nu, rates.nu_union, rates.tau_union)?;
    let targets = if spec.builtin_kind().is_some() {
        target_rows(&estimates, &limits, &rates)
    } else {
        Vec::new()
    };

    let mut conditions = Vec::new();
    let point = |values: &[f64]| {
        let (value, std_error) = crate::diagnostics::mean_and_se(values);
        vec![GridPoint {
            x: n as f64,
            value,
            std_error,
        }]
    };
    if spec.d() >= 2 {
        conditions.push(ConditionReport::from_points(
            "cross_margin_h_sum",
            point(&h_values),
        ));
        conditions.push(ConditionReport::from_points(
            "cross_margin_i1",
            point(&i1_values),
        ));
    }
    if r >= 5 {
        conditions.push(ConditionReport::from_points(
            "local_oscillation",
            point(&osc_values),
        ));
    }

    let mut draws = config.replicates * spec.innovations_per_window(n);
    let scaling = match config.scaling_c {
        Some(c) => {
            let report = scaling_check(
                &spec,
                &config.tau_prime,
                n,
                c,
                config.blocks.explicit(),
                config.replicates,
                config.workers,
                seed,
            )?;
            draws += config.replicates * spec.innovations_per_window(n);
            Some(report)
        }
        None => None,
    };
    let continuity = match &config.epsilons {
        Some(epsilons) => {
            let margin = config.shrink_margin_index(spec.d());
            let report = continuity_check(
                &spec,
                &rates.nu,
                margin,
                epsilons,
                n,
                config.replicates,
                config.workers,
                seed,
            )?;
            draws += config.replicates
                * (spec.innovations_per_window(n) + subvector_innovations(&spec, margin, n)?);
            Some(report)
        }
        None => None,
    };

    Ok(RunReport {
        config: config.clone(),
        process: ProcessSummary::of(&spec),
        levels: levels.as_slice().to_vec(),
        rates,
        estimates,
        limits,
        targets,
        multiplicity,
        cluster_sizes,
        marginal_cluster_sizes,
        conditions,
        scaling,
        continuity,
        draws,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Draws consumed per window by the continuity check's dropped-margin arm.
fn subvector_innovations(
    spec: &crate::generators::ProcessSpec,
    margin: usize,
    n: usize,
) -> Result<u64> {
    let sub_lags: Vec<Vec<i64>> = (0..spec.d())
        .filter(|&j| j != margin)
        .map(|j| spec.lags()[j].clone())
        .collect();
    Ok(make_process(sub_lags)?.innovations_per_window(n))
}

/// Evaluate the condition statistics over the window grid, with optional
/// scaling and continuity checks at the largest window.
pub fn run_diagnostics(config: &DiagnoseConfig) -> Result<DiagnoseReport> {
    let started = Instant::now();
    let spec = config.process_spec()?;
    config.validate(&spec)?;
    let rates = limiting_rates(&spec, &config.tau_prime)?;
    let k = config.blocks.explicit();
    let seed = config.seed;

    let mut h_points = Vec::new();
    let mut local_osc_points = Vec::new();
    let mut draws = 0u64;
    for step in &config.grid {
        if spec.d() >= 2 {
            h_points.push(h_sum(
                &spec,
                &config.tau_prime,
                step.n,
                k,
                step.replicates,
                config.workers,
                seed,
            )?);
            draws += step.replicates * spec.innovations_per_window(step.n);
        }
        // the oscillation statistic looks r - 3 steps past its anchor, so
        // short blocks carry no information; skip those grid steps
        if config.blocks.scheme(step.n)?.r() >= 5 {
            local_osc_points.push(local_osc(
                &spec,
                &config.tau_prime,
                step.n,
                k,
                step.replicates,
                config.workers,
                seed,
            )?);
            draws += step.replicates * spec.innovations_per_window(step.n);
        }
    }

    let mut conditions = Vec::new();
    if !h_points.is_empty() {
        conditions.push(ConditionReport::from_points(
            "cross_margin_h_sum",
            h_points
                .iter()
                .map(|p| GridPoint {
                    x: p.n as f64,
                    value: p.value,
                    std_error: p.std_error,
                })
                .collect(),
        ));
        conditions.push(ConditionReport::from_points(
            "cross_margin_i1",
            h_points
                .iter()
                .map(|p| GridPoint {
                    x: p.n as f64,
                    value: p.i1_value,
                    std_error: p.i1_std_error,
                })
                .collect(),
        ));
    }
    if !local_osc_points.is_empty() {
        conditions.push(ConditionReport::from_points(
            "local_oscillation",
            local_osc_points
                .iter()
                .map(|p| GridPoint {
                    x: p.n as f64,
                    value: p.value,
                    std_error: p.std_error,
                })
                .collect(),
        ));
    }

    let last = config.grid[config.grid.len() - 1];
    let scaling = match config.scaling_c {
        Some(c) => {
            let report = scaling_check(
                &spec,
                &config.tau_prime,
                last.n,
                c,
                k,
                last.replicates,
                config.workers,
                seed,
            )?;
            draws += last.replicates * spec.innovations_per_window(last.n);
            Some(report)
        }
        None => None,
    };
    let continuity = match &config.epsilons {
        Some(epsilons) => {
            let margin = config.shrink_margin_index(spec.d());
            let report = continuity_check(
                &spec,
                &rates.nu,
                margin,
                epsilons,
                last.n,
                last.replicates,
                config.workers,
                seed,
            )?;
            draws += last.replicates
                * (spec.innovations_per_window(last.n)
                    + subvector_innovations(&spec, margin, last.n)?);
            Some(report)
        }
        None => None,
    };

    Ok(DiagnoseReport {
        config: config.clone(),
        process: ProcessSummary::of(&spec),
        rates,
        conditions,
        h_points,
        local_osc_points,
        scaling,
        continuity,
        draws,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}
