//! Replication management: turning a [`Scenario`] into metric traces and
//! output files.
//!
//! Replications are independent — each seed roots its own stream tree — so
//! seeds run in parallel. Within a replication everything is sequential and
//! deterministic: the same `(scenario, seed)` pair always produces the same
//! trace, byte for byte.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::{MetricsTrace, SeedSummary};
use crate::sa::StepSchedules;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Runs one replication and collects its full trace.
pub fn run_single(scenario: &Scenario, seed: u64) -> Result<MetricsTrace> {
    scenario.validate()?;
    let mut tracker = scenario.build_tracker(seed)?;
    let mut trace = MetricsTrace::new(tracker.theta_dim(), tracker.extra_columns());
    for _ in 0..scenario.slots {
        trace.push(tracker.step()?);
    }
    Ok(trace)
}

/// Runs every seed of the scenario, in parallel, returning traces in the
/// order the seeds are listed. Configuration errors surface before any
/// replication starts.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<(u64, MetricsTrace)>> {
    scenario.validate()?;
    scenario
        .seeds
        .par_iter()
        .map(|&seed| run_single(scenario, seed).map(|trace| (seed, trace)))
        .collect()
}

/// Aggregate summary of one scenario's replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub tracker: String,
    /// Content hash of the scenario that produced these numbers.
    pub scenario_hash: String,
    pub slots: u64,
    /// Echo of the step-size rules, so a summary is interpretable alone.
    pub schedules: StepSchedules,
    pub per_seed: Vec<SeedSummary>,
    /// Mean over seeds of the per-seed time-averaged squared error.
    pub mean_mse_avg: f64,
    /// Mean over seeds of the per-seed average active-sensor count.
    pub mean_active_avg: f64,
}

impl ScenarioReport {
    pub fn new(scenario: &Scenario, runs: &[(u64, MetricsTrace)]) -> Self {
        let per_seed: Vec<SeedSummary> = runs
            .iter()
            .map(|(seed, trace)| SeedSummary::from_trace(*seed, trace, scenario.n_bar))
            .collect();
        let k = per_seed.len().max(1) as f64;
        Self {
            scenario: scenario.name.clone(),
            tracker: scenario.tracker.name().into(),
            scenario_hash: scenario.hash(),
            slots: scenario.slots,
            schedules: scenario.schedules,
            mean_mse_avg: per_seed.iter().map(|s| s.mse_avg).sum::<f64>() / k,
            mean_active_avg: per_seed.iter().map(|s| s.active_avg).sum::<f64>() / k,
            per_seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serializing report: {e}")))
    }
}

/// Path of the per-seed trace file inside an output directory.
pub fn trace_path(dir: &Path, scenario: &Scenario, seed: u64) -> PathBuf {
    dir.join(format!("{}_seed{}.csv", scenario.name, seed))
}

/// Path of the aggregate summary inside an output directory.
pub fn summary_path(dir: &Path, scenario: &Scenario) -> PathBuf {
    dir.join(format!("{}_summary.json", scenario.name))
}

/// Runs the scenario and writes one CSV per seed plus the aggregate JSON
/// summary into `dir` (created if missing).
pub fn run_scenario_to_dir(scenario: &Scenario, dir: &Path) -> Result<ScenarioReport> {
    let runs = run_scenario(scenario)?;
    std::fs::create_dir_all(dir)?;
    for (seed, trace) in &runs {
        trace.write_csv_file(&trace_path(dir, scenario, *seed))?;
    }
    let report = ScenarioReport::new(scenario, &runs);
    std::fs::write(summary_path(dir, scenario), report.to_json()?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{iid_preset, markov_preset, TrackerKind};

    fn tiny(tracker: TrackerKind, slots: u64) -> Scenario {
        let mut s = if tracker.wants_markov() { markov_preset(1) } else { iid_preset() };
        s.tracker = tracker;
        s.slots = slots;
        s.seeds = vec![41, 42];
        s
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let s = tiny(TrackerKind::CentralUnknown, 120);
        let a = run_single(&s, 42).unwrap().to_csv_string();
        let b = run_single(&s, 42).unwrap().to_csv_string();
        assert_eq!(a, b);
        let c = run_single(&s, 41).unwrap().to_csv_string();
        assert_ne!(a, c, "different seeds must differ");
    }

    #[test]
    fn zero_slots_yield_an_empty_valid_trace() {
        let s = tiny(TrackerKind::CentralKnown, 0);
        let trace = run_single(&s, 1).unwrap();
        assert!(trace.is_empty());
        assert!(trace.to_csv_string().starts_with("t,mse,mse_avg,"));
    }

    #[test]
    fn parallel_seed_order_matches_the_scenario() {
        let s = tiny(TrackerKind::Greedy, 50);
        let runs = run_scenario(&s).unwrap();
        let seeds: Vec<u64> = runs.iter().map(|(seed, _)| *seed).collect();
        assert_eq!(seeds, s.seeds);
    }

    #[test]
    fn report_aggregates_per_seed_summaries() {
        let s = tiny(TrackerKind::CentralKnown, 200);
        let runs = run_scenario(&s).unwrap();
        let report = ScenarioReport::new(&s, &runs);
        assert_eq!(report.per_seed.len(), 2);
        let expect =
            report.per_seed.iter().map(|p| p.mse_avg).sum::<f64>() / report.per_seed.len() as f64;
        assert!((report.mean_mse_avg - expect).abs() < 1e-15);
        assert_eq!(report.scenario_hash, s.hash());
    }

    #[test]
    fn directory_run_writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny(TrackerKind::PerfectBlind, 30);
        let report = run_scenario_to_dir(&s, dir.path()).unwrap();
        for &seed in &s.seeds {
            let text = std::fs::read_to_string(trace_path(dir.path(), &s, seed)).unwrap();
            let (_, rows) = crate::metrics::read_csv(&text).unwrap();
            assert_eq!(rows.len(), 30);
        }
        let json = std::fs::read_to_string(summary_path(dir.path(), &s)).unwrap();
        let back: ScenarioReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn invalid_scenarios_fail_before_any_work() {
        let mut s = tiny(TrackerKind::CentralUnknown, 10);
        s.n_bar = -1.0;
        assert!(run_scenario(&s).is_err());
    }
}
