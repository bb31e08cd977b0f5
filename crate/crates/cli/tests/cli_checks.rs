//! End-to-end checks of the installed `tracksel` binary: every subcommand is
//! exercised through a real process, and the filesystem outputs are held to
//! the same contracts the library tests pin (deterministic bytes, exact
//! normalization, honest error reporting).

use std::path::Path;
use std::process::{Command, Output};

fn tracksel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracksel"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output, context: &str) {
    assert!(
        out.status.success(),
        "{context} failed.\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn preset_output_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let emitted = tracksel(&["preset", "iid", "--out", "configs"], dir.path());
    assert_success(&emitted, "preset iid");
    let path = dir.path().join("configs/iid-preset.toml");
    assert!(path.exists(), "preset must write <name>.toml into --out");

    let validated = tracksel(&["validate", "--config", "configs/iid-preset.toml"], dir.path());
    assert_success(&validated, "validate on an emitted preset");
    let stdout = String::from_utf8(validated.stdout).unwrap();
    assert!(stdout.starts_with("ok:"), "validate reports ok, got: {stdout}");
    assert!(stdout.contains("hash"), "validate prints the content hash");
}

#[test]
fn preset_to_stdout_is_parseable_toml() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracksel(&["preset", "markov", "--instance", "3"], dir.path());
    assert_success(&out, "preset markov to stdout");
    let text = String::from_utf8(out.stdout).unwrap();
    let value: toml::Value = toml::from_str(&text).expect("stdout is valid TOML");
    assert_eq!(value["name"].as_str(), Some("markov-preset-3"));
    assert_eq!(value["tracker"].as_str(), Some("kcf"));
}

#[test]
fn run_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--tracker", "central-known", "--slots", "400", "--seed", "5"];
    for out_dir in ["a", "b"] {
        let full: Vec<&str> = args.iter().copied().chain(["--out", out_dir]).collect();
        assert_success(&tracksel(&full, dir.path()), "run");
    }
    let csv_a = std::fs::read(dir.path().join("a/iid-preset_seed5.csv")).unwrap();
    let csv_b = std::fs::read(dir.path().join("b/iid-preset_seed5.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b, "identical invocations must write identical trace bytes");
    let sum_a = std::fs::read(dir.path().join("a/iid-preset_summary.json")).unwrap();
    let sum_b = std::fs::read(dir.path().join("b/iid-preset_summary.json")).unwrap();
    assert_eq!(sum_a, sum_b, "identical invocations must write identical summaries");
}

#[test]
fn run_summary_carries_the_advertised_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracksel(
        &["run", "--tracker", "greedy", "--slots", "50", "--seeds", "2", "--out", "res"],
        dir.path(),
    );
    assert_success(&out, "run greedy");
    let text = std::fs::read_to_string(dir.path().join("res/iid-preset_summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(summary["tracker"], "greedy");
    assert_eq!(summary["slots"], 50);
    assert_eq!(summary["per_seed"].as_array().unwrap().len(), 2);
    assert_eq!(summary["scenario_hash"].as_str().unwrap().len(), 16);
    // The greedy baseline always reads its fixed pair of sensors.
    assert_eq!(summary["mean_active_avg"].as_f64().unwrap(), 2.0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("seed    1:"), "run prints a per-seed line, got: {stdout}");
}

#[test]
fn oracle_writes_a_normalized_distribution_and_a_monotone_response() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracksel(
        &["oracle", "--beta", "4", "--lambda", "0.15", "--grid", "11", "--out", "dump"],
        dir.path(),
    );
    assert_success(&out, "oracle");

    let dist = std::fs::read_to_string(dir.path().join("dump/iid-preset_distribution.csv")).unwrap();
    let lines: Vec<&str> = dist.lines().collect();
    assert_eq!(lines.len(), 1 + 32, "header plus one row per configuration");
    assert_eq!(lines[0], "config,active,f,h,prob");
    let total: f64 = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12, "probabilities sum to {total}");

    let resp = std::fs::read_to_string(dir.path().join("dump/iid-preset_price_response.csv")).unwrap();
    let means: Vec<f64> = resp
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .collect();
    assert_eq!(means.len(), 11);
    for pair in means.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "mean active count must not rise with the price");
    }
}

#[test]
fn oracle_refuses_markov_scenarios_with_a_clear_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracksel(&["oracle", "--tracker", "kcf"], dir.path());
    assert!(!out.status.success(), "oracle on a markov scenario must fail");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error:"), "errors go to stderr with a prefix, got: {stderr}");
    assert!(stderr.contains("i.i.d."), "the message names the restriction, got: {stderr}");
}

#[test]
fn validate_rejects_a_broken_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    // Emit a valid preset, then break one invariant: a zero learning period.
    assert_success(&tracksel(&["preset", "iid", "--out", "."], dir.path()), "preset");
    let path = dir.path().join("iid-preset.toml");
    let text = std::fs::read_to_string(&path).unwrap().replace("period = 20", "period = 0");
    std::fs::write(&path, text).unwrap();

    let out = tracksel(&["validate", "--config", "iid-preset.toml"], dir.path());
    assert!(!out.status.success(), "validate must reject period = 0");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error:"), "got: {stderr}");
}

#[test]
fn missing_config_files_fail_without_panicking() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracksel(&["run", "--config", "no-such-file.toml"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error:"), "a missing file is a reported error, got: {stderr}");
}
