//! In-repo reference experiments, one command each.
//!
//! Replicate counts are sized so the reference tolerances sit at roughly
//! 2.5 standard errors or better: the ex62 regime runs carry the 5%
//! relative tolerance on the no-upcrossing probability (its error is the
//! union rate's, about sqrt(5/R)), and the iid null run carries the 0.02
//! absolute tolerance on the probability-route index estimates (error
//! about sqrt(1.7/R)). Everything else reaches its tolerance comfortably
//! at the default desk scale of 2000 replicates.

use super::config::{
    BlockRule, DiagnoseConfig, ExperimentConfig, GridStep, OutputFormat, ProcessChoice,
    DEFAULT_MASTER_SEED,
};

/// One named experiment arm; multi-arm presets return several.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetJob {
    /// Output subdirectory and log label.
    pub label: String,
    pub kind: JobKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JobKind {
    Run(ExperimentConfig),
    Diagnose(DiagnoseConfig),
}

pub fn preset_names() -> &'static [&'static str] {
    &[
        "ex61-table",
        "ex62-regimes",
        "iid-null",
        "ex61-conditions",
        "ex62-conditions",
        "ex61-scaling",
        "ex61-continuity",
        "ex62-continuity",
    ]
}

fn run_config(
    process: &str,
    margins: Option<usize>,
    tau_prime: Vec<f64>,
    n: usize,
    replicates: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        process: ProcessChoice::Builtin(process.into()),
        margins,
        n,
        replicates,
        tau_prime,
        blocks: BlockRule::Sqrt,
        seed: DEFAULT_MASTER_SEED,
        workers: None,
        out_dir: None,
        formats: vec![OutputFormat::Json, OutputFormat::Csv],
        scaling_c: None,
        epsilons: None,
        shrink_margin: None,
    }
}

fn diagnose_config(process: &str, tau_prime: Vec<f64>, grid: Vec<GridStep>) -> DiagnoseConfig {
    DiagnoseConfig {
        process: ProcessChoice::Builtin(process.into()),
        margins: None,
        tau_prime,
        grid,
        blocks: BlockRule::Sqrt,
        seed: DEFAULT_MASTER_SEED,
        workers: None,
        out_dir: None,
        formats: vec![OutputFormat::Json, OutputFormat::Csv],
        scaling_c: None,
        epsilons: None,
        shrink_margin: None,
    }
}

fn trend_grid() -> Vec<GridStep> {
    vec![
        GridStep {
            n: 1_000,
            replicates: 2_000,
        },
        GridStep {
            n: 10_000,
            replicates: 2_000,
        },
        GridStep {
            n: 100_000,
            replicates: 500,
        },
    ]
}

fn run_job(label: &str, config: ExperimentConfig) -> PresetJob {
    PresetJob {
        label: label.into(),
        kind: JobKind::Run(config),
    }
}

fn diagnose_job(label: &str, config: DiagnoseConfig) -> PresetJob {
    PresetJob {
        label: label.into(),
        kind: JobKind::Diagnose(config),
    }
}

/// Look a preset up by name. `None` means the name is unknown; the
/// available names are in [`preset_names`].
pub fn preset(name: &str) -> Option<Vec<PresetJob>> {
    let jobs = match name {
        // the two-margin reference table: marginal indices 1/2 and 1,
        // union index 2/3, extremal index 1/2, multiplicity split 50/50
        "ex61-table" => {
            vec![run_job(
                "ex61-table",
                run_config("ex61", None, vec![1.0, 1.0], 10_000, 2_000),
            )]
        }
        // both branches of the piecewise index: rates (2,2) fall in the
        // dominated branch (index 2/3), rates (4,0.5) in the saturated
        // branch (index 1/2)
        "ex62-regimes" => vec![
            run_job(
                "ex62-upper",
                run_config("ex62", None, vec![1.0, 2.0], 10_000, 12_000),
            ),
            run_job(
                "ex62-lower",
                run_config("ex62", None, vec![2.0, 0.5], 10_000, 12_000),
            ),
        ],
        // no clustering at all: every index estimate must sit at 1
        "iid-null" => {
            vec![run_job(
                "iid-null",
                run_config("iid", Some(1), vec![1.0], 10_000, 40_000),
            )]
        }
        "ex61-conditions" => vec![diagnose_job(
            "ex61-conditions",
            diagnose_config("ex61", vec![1.0, 1.0], trend_grid()),
        )],
        "ex62-conditions" => vec![diagnose_job(
            "ex62-conditions",
            diagnose_config("ex62", vec![1.0, 2.0], trend_grid()),
        )],
        "ex61-scaling" => {
            let mut config = diagnose_config(
                "ex61",
                vec![1.0, 1.0],
                vec![GridStep {
                    n: 10_000,
                    replicates: 2_000,
                }],
            );
            config.scaling_c = Some(2.0);
            vec![diagnose_job("ex61-scaling", config)]
        }
        "ex61-continuity" => {
            let mut config = diagnose_config(
                "ex61",
                vec![1.0, 1.0],
                vec![GridStep {
                    n: 10_000,
                    replicates: 2_000,
                }],
            );
            config.epsilons = Some(vec![0.5, 0.1, 0.02]);
            vec![diagnose_job("ex61-continuity", config)]
        }
        "ex62-continuity" => {
            let mut config = diagnose_config(
                "ex62",
                vec![2.0, 0.5],
                vec![GridStep {
                    n: 10_000,
                    replicates: 2_000,
                }],
            );
            config.epsilons = Some(vec![0.5, 0.1, 0.02]);
            vec![diagnose_job("ex62-continuity", config)]
        }
        _ => return None,
    };
    Some(jobs)
}
