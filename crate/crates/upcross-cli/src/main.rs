//! Command-line driver for the upcrossing toolkit.
//!
//! Four subcommands: `run` an experiment from a TOML config, run a shipped
//! reference `preset` by name, evaluate the exact `oracle` probability of an
//! event read from JSON, and `diagnose` the asymptotic conditions over a
//! window-length grid. Flags override the corresponding config fields, and
//! the output directory falls back to `$UPCROSS_OUT_DIR`, then `./out`.
//!
//! Exit status is zero only when every requested job ran and its files were
//! written; rejected configs fail fast with a message naming the field.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use upcross::harness::{
    estimate_rows, preset, preset_names, run_diagnostics, run_experiment, write_diagnose_files,
    write_run_files, BlockRule, DiagnoseConfig, DiagnoseReport, ExperimentConfig, JobKind,
    OutputFormat, RunReport, OUT_DIR_ENV,
};
use upcross::oracle::{exact_prob, monte_carlo_prob};
use upcross::EventExpr;

#[derive(Parser)]
#[command(
    name = "upcross",
    version,
    about = "Simulate, estimate, and diagnose upcrossing clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config file.
    Run {
        /// Config file path.
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a shipped reference experiment by name.
    Preset {
        /// Preset name; `--list` shows the choices.
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// List the available preset names and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Exact probability of a boolean innovation event, read as JSON.
    Oracle {
        /// Event file: JSON for one event expression.
        event: PathBuf,
        /// Also report a Monte Carlo frequency at this many draws.
        #[arg(long)]
        mc_draws: Option<u64>,
        /// Seed for the Monte Carlo cross-check.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Evaluate the dependence conditions over a window grid.
    Diagnose {
        /// Config file path.
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Config-field overrides; a flag always wins over the file.
#[derive(Args, Clone)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count (run configs only).
    #[arg(long)]
    replicates: Option<u64>,
    /// Window length (run configs only).
    #[arg(long)]
    n: Option<usize>,
    /// Block rule: `sqrt` or an explicit block count.
    #[arg(long)]
    blocks: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format, repeatable.
    #[arg(long, value_enum)]
    format: Option<Vec<FormatArg>>,
    /// Worker threads; affects wall clock only, never results.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

fn parse_blocks(text: &str) -> Result<BlockRule> {
    if text == "sqrt" {
        return Ok(BlockRule::Sqrt);
    }
    text.parse::<usize>()
        .map(BlockRule::Fixed)
        .map_err(|_| anyhow!("--blocks takes `sqrt` or a block count, got `{text}`"))
}

impl Overrides {
    fn apply_run(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(replicates) = self.replicates {
            config.replicates = replicates;
        }
        if let Some(n) = self.n {
            config.n = n;
        }
        if let Some(blocks) = &self.blocks {
            config.blocks = parse_blocks(blocks)?;
        }
        if let Some(out) = &self.out {
            config.out_dir = Some(out.clone());
        }
        if let Some(formats) = &self.format {
            config.formats = formats.iter().map(|&f| f.into()).collect();
        }
        if let Some(workers) = self.workers {
            config.workers = Some(workers);
        }
        Ok(())
    }

    fn apply_diagnose(&self, config: &mut DiagnoseConfig) -> Result<()> {
        if self.n.is_some() || self.replicates.is_some() {
            bail!("--n and --replicates apply to run configs; a diagnose config sizes each grid step itself");
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(blocks) = &self.blocks {
            config.blocks = parse_blocks(blocks)?;
        }
        if let Some(out) = &self.out {
            config.out_dir = Some(out.clone());
        }
        if let Some(formats) = &self.format {
            config.formats = formats.iter().map(|&f| f.into()).collect();
        }
        if let Some(workers) = self.workers {
            config.workers = Some(workers);
        }
        Ok(())
    }
}

/// Config directory, then the environment default, then `./out`; preset
/// arms get their label as a subdirectory.
fn resolve_out_dir(configured: Option<&Path>, label: Option<&str>) -> PathBuf {
    let base = configured
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match label {
        Some(label) => base.join(label),
        None => base,
    }
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn print_run_summary(report: &RunReport, written: &[PathBuf]) {
    println!(
        "{}  n={}  replicates={}  seed={}  ({:.1}s, {} draws)",
        report.process.name,
        report.config.n,
        report.config.replicates,
        report.config.seed,
        report.wall_clock_seconds,
        report.draws
    );
    for (name, estimate) in estimate_rows(&report.estimates) {
        let target =
            report
                .targets
                .iter()
                .find(|t| t.estimator == name)
                .map_or(String::new(), |t| {
                    format!(
                        "  target {:.4}  delta {}",
                        t.target,
                        t.delta.map_or_else(|| "-".into(), |d| format!("{d:.4}"))
                    )
                });
        println!(
            "  {name:<16} {:>8}  se {:>8}{target}",
            opt(estimate.value),
            opt(estimate.std_error)
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
}

fn print_diagnose_summary(report: &DiagnoseReport, written: &[PathBuf]) {
    println!(
        "{}  grid of {} window lengths  seed={}  ({:.1}s, {} draws)",
        report.process.name,
        report.conditions.first().map_or(0, |c| c.points.len()),
        report.config.seed,
        report.wall_clock_seconds,
        report.draws
    );
    for condition in &report.conditions {
        let first = condition.points.first();
        let last = condition.points.last();
        println!(
            "  {:<24} {:?}  ({} -> {})",
            condition.statistic,
            condition.verdict,
            first.map_or_else(|| "-".into(), |p| format!("{:.4}", p.value)),
            last.map_or_else(|| "-".into(), |p| format!("{:.4}", p.value)),
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
}

fn cmd_run(path: &Path, overrides: &Overrides) -> Result<()> {
    let mut config = ExperimentConfig::from_path(path)?;
    overrides.apply_run(&mut config)?;
    let report = run_experiment(&config)?;
    let dir = resolve_out_dir(config.out_dir.as_deref(), None);
    let written = write_run_files(&report, &dir, &config.formats)?;
    print_run_summary(&report, &written);
    Ok(())
}

fn cmd_preset(name: Option<&str>, list: bool, overrides: &Overrides) -> Result<()> {
    if list {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let name = name.expect("clap requires a name without --list");
    let jobs = preset(name)
        .ok_or_else(|| anyhow!("unknown preset `{name}`; `--list` shows the available names"))?;
    for job in jobs {
        println!("== {} ==", job.label);
        match job.kind {
            JobKind::Run(mut config) => {
                overrides.apply_run(&mut config)?;
                let report = run_experiment(&config)?;
                let dir = resolve_out_dir(config.out_dir.as_deref(), Some(&job.label));
                let written = write_run_files(&report, &dir, &config.formats)?;
                print_run_summary(&report, &written);
            }
            JobKind::Diagnose(mut config) => {
                overrides.apply_diagnose(&mut config)?;
                let report = run_diagnostics(&config)?;
                let dir = resolve_out_dir(config.out_dir.as_deref(), Some(&job.label));
                let written = write_diagnose_files(&report, &dir, &config.formats)?;
                print_diagnose_summary(&report, &written);
            }
        }
    }
    Ok(())
}

fn cmd_oracle(path: &Path, mc_draws: Option<u64>, seed: u64) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read event file {}", path.display()))?;
    let event: EventExpr = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse event JSON in {}", path.display()))?;
    let exact = exact_prob(&event)?;
    println!("exact_prob = {exact}");
    if let Some(draws) = mc_draws {
        let freq = monte_carlo_prob(&event, draws, seed)?;
        let se = (exact * (1.0 - exact) / draws.max(1) as f64).sqrt();
        println!("mc_frequency = {freq}  (draws {draws}, seed {seed}, se {se:.2e})");
    }
    Ok(())
}

fn cmd_diagnose(path: &Path, overrides: &Overrides) -> Result<()> {
    let mut config = DiagnoseConfig::from_path(path)?;
    overrides.apply_diagnose(&mut config)?;
    let report = run_diagnostics(&config)?;
    let dir = resolve_out_dir(config.out_dir.as_deref(), None);
    let written = write_diagnose_files(&report, &dir, &config.formats)?;
    print_diagnose_summary(&report, &written);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config, overrides } => cmd_run(config, overrides),
        Command::Preset {
            name,
            list,
            overrides,
        } => cmd_preset(name.as_deref(), *list, overrides),
        Command::Oracle {
            event,
            mc_draws,
            seed,
        } => cmd_oracle(event, *mc_draws, *seed),
        Command::Diagnose { config, overrides } => cmd_diagnose(config, overrides),
    }
}
