//! End-to-end checks of the binary: documented file schemas, determinism
//! across invocations and worker counts, flag-over-file precedence, and
//! diagnostics that name the offending field or value.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use upcross::harness::OUT_DIR_ENV;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_upcross"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn small_config(seed: u64) -> String {
    format!("process = \"ex61\"\nn = 400\nreplicates = 60\ntau_prime = [1.0, 1.0]\nseed = {seed}\n")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap_or_default().to_string()
}

#[test]
fn run_writes_the_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    write(&config, &small_config(11));
    let out = dir.path().join("results");
    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));

    assert_eq!(
        first_line(&out.join("estimates.csv")),
        "estimator,value,std_error,event_count,target,delta"
    );
    assert_eq!(
        first_line(&out.join("multiplicity.csv")),
        "count_vector,frequency,block_count"
    );
    assert_eq!(
        first_line(&out.join("cluster_sizes.csv")),
        "count_vector,frequency,block_count"
    );
    assert_eq!(
        first_line(&out.join("diagnostics.csv")),
        "statistic,x,value,std_error"
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["process"]["name"], "ex61");
    assert_eq!(report["config"]["seed"], 11);
}

#[test]
fn reports_are_deterministic_across_invocations_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    write(&config, &small_config(5));
    let out = dir.path().join("results");
    let mut reports: Vec<String> = Vec::new();
    // same config and output path every time, so the reports must match
    // byte for byte once the wall-clock line is blanked
    for workers in ["1", "3", "1"] {
        let output = bin()
            .arg("run")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--workers")
            .arg(workers)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr_of(&output));
        let text = std::fs::read_to_string(out.join("report.json")).unwrap();
        let normalized: Vec<&str> = text
            .lines()
            .map(|line| {
                if line.trim_start().starts_with("\"wall_clock_seconds\"") {
                    "<wall clock>"
                } else {
                    line
                }
            })
            .collect();
        reports.push(normalized.join("\n"));
    }
    assert_eq!(reports[0], reports[1], "worker count changed the report");
    assert_eq!(reports[0], reports[2], "same invocation differed");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    write(&config, &small_config(11));
    let out = dir.path().join("results");
    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("--seed")
        .arg("7")
        .arg("--n")
        .arg("300")
        .arg("--replicates")
        .arg("40")
        .arg("--blocks")
        .arg("10")
        .arg("--format")
        .arg("json")
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["config"]["n"], 300);
    assert_eq!(report["config"]["replicates"], 40);
    assert_eq!(report["config"]["blocks"], 10);
    // json-only format override suppresses the CSV tables
    assert!(!out.join("estimates.csv").exists());
}

#[test]
fn environment_variable_sets_the_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    write(&config, &small_config(3));
    let out = dir.path().join("from-env");
    let output = bin()
        .arg("run")
        .arg(&config)
        .env(OUT_DIR_ENV, &out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(out.join("report.json").exists());
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    write(&config, &format!("{}replicats = 3\n", small_config(1)));
    let output = bin().arg("run").arg(&config).output().unwrap();
    assert!(!output.status.success());
    assert!(
        stderr_of(&output).contains("replicats"),
        "stderr should name the unknown key: {}",
        stderr_of(&output)
    );
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    // one rate for a two-margin process
    write(
        &config,
        "process = \"ex61\"\nn = 400\nreplicates = 10\ntau_prime = [1.0]\n",
    );
    let output = bin().arg("run").arg(&config).output().unwrap();
    assert!(!output.status.success());
    assert!(
        stderr_of(&output).contains("tau_prime"),
        "stderr should name the field: {}",
        stderr_of(&output)
    );
}

#[test]
fn bad_blocks_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    write(&config, &small_config(1));
    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--blocks")
        .arg("bogus")
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(
        stderr_of(&output).contains("--blocks"),
        "stderr should explain the flag: {}",
        stderr_of(&output)
    );
}

#[test]
fn oracle_evaluates_events_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let event = dir.path().join("event.json");
    write(
        &event,
        r#"{"or":[{"above":{"index":1,"threshold":0.5}},{"above":{"index":2,"threshold":0.5}}]}"#,
    );
    let output = bin()
        .arg("oracle")
        .arg(&event)
        .arg("--mc-draws")
        .arg("20000")
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("exact_prob = 0.75"), "{stdout}");
    assert!(stdout.contains("mc_frequency"), "{stdout}");
}

#[test]
fn malformed_event_json_fails_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let event = dir.path().join("event.json");
    write(&event, "{\"above\": 3}");
    let output = bin().arg("oracle").arg(&event).output().unwrap();
    assert!(!output.status.success());
    assert!(
        stderr_of(&output).contains("event.json"),
        "stderr should name the file: {}",
        stderr_of(&output)
    );
}

#[test]
fn preset_listing_and_unknown_names() {
    let output = bin().arg("preset").arg("--list").output().unwrap();
    assert!(output.status.success());
    let stdout = stdout_of(&output);
    assert!(stdout.contains("ex61-table"), "{stdout}");
    assert!(stdout.contains("iid-null"), "{stdout}");

    let output = bin().arg("preset").arg("no-such-preset").output().unwrap();
    assert!(!output.status.success());
    assert!(
        stderr_of(&output).contains("no-such-preset"),
        "{}",
        stderr_of(&output)
    );
}

#[test]
fn diagnose_writes_grid_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("diag.toml");
    write(
        &config,
        "process = \"ex61\"\ntau_prime = [1.0, 1.0]\nseed = 4\n\
         grid = [{ n = 200, replicates = 40 }, { n = 400, replicates = 40 }]\n",
    );
    let out = dir.path().join("results");
    let output = bin()
        .arg("diagnose")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "statistic,x,value,std_error");
    assert!(csv.contains("cross_margin_h_sum"), "{csv}");
    // the run-focused overrides are rejected with an explanation
    let output = bin()
        .arg("diagnose")
        .arg(&config)
        .arg("--n")
        .arg("500")
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(stderr_of(&output).contains("--n"), "{}", stderr_of(&output));
}

#[test]
fn preset_runs_write_one_directory_per_arm() {
    let dir = tempfile::tempdir().unwrap();
    let out: PathBuf = dir.path().join("preset-out");
    // shrink the table preset to smoke-test scale; flags win over the preset
    let output = bin()
        .arg("preset")
        .arg("ex61-table")
        .arg("--n")
        .arg("300")
        .arg("--replicates")
        .arg("30")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(out.join("ex61-table").join("report.json").exists());
    assert!(out.join("ex61-table").join("estimates.csv").exists());
}
