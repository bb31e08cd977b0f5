//! Declarative experiment descriptions, loadable from TOML.
//!
//! A [`Scenario`] pins down everything a replication needs — process model,
//! tracker kind, step sizes, horizon, seeds — so that a run is a pure
//! function of `(scenario, seed)`. Two presets mirror the experiment
//! families the trackers were tuned on: an i.i.d. scalar process with five
//! sensors ([`iid_preset`]) and a four-state Markov chain observed by a
//! five-node line network ([`markov_preset`]).
//!
//! Scenarios carry an explicit model (all drawn constants embedded), so a
//! saved file reproduces its runs even if preset generation changes later.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::{CentralKalmanTracker, GreedyTracker, PerfectBlindTracker};
use crate::model::{GaussianFamily, IidModel, MarkovModel, SensorModel, Topology, MAX_SENSORS};
use crate::rng::SeedTree;
use crate::sa::{StepRule, StepSchedules};
use crate::tracker::{
    CentralMode, CentralParams, CentralTracker, DistIidParams, DistIidTracker, KcfParams,
    KcfTracker, Tracker,
};
use crate::{Error, Result};

use nalgebra::DMatrix;

/// Hard cap on sensors in a scenario: every tracker keeps dense
/// per-configuration tables of `2^N` entries.
pub const MAX_SCENARIO_SENSORS: usize = 20;

/// Seed used to draw the preset sensor constants (embedded in the emitted
/// scenario, so this only matters for preset generation itself).
const PRESET_SEED: u64 = 17;

/// Which tracking loop a scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackerKind {
    /// Centralized selection with the error table computed exactly up front.
    CentralKnown,
    /// Centralized selection learning the table and parameter from
    /// periodic full-read slots.
    CentralUnknown,
    /// Centralized learning confined to the currently active subset.
    CentralLowcomplex,
    /// Distributed consensus estimation of an i.i.d. scalar process.
    DistIid,
    /// Distributed Kalman-consensus tracking of a Markov chain.
    Kcf,
    /// Baseline: a fixed sensor subset, never adapted.
    Greedy,
    /// Baseline: centralized Kalman recursion on two fixed sensors.
    CentralKalman,
    /// Baseline: predicts from the true previous state, reads nothing.
    PerfectBlind,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 8] = [
        TrackerKind::CentralKnown,
        TrackerKind::CentralUnknown,
        TrackerKind::CentralLowcomplex,
        TrackerKind::DistIid,
        TrackerKind::Kcf,
        TrackerKind::Greedy,
        TrackerKind::CentralKalman,
        TrackerKind::PerfectBlind,
    ];

    /// The kebab-case name used in config files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::CentralKnown => "central-known",
            TrackerKind::CentralUnknown => "central-unknown",
            TrackerKind::CentralLowcomplex => "central-lowcomplex",
            TrackerKind::DistIid => "dist-iid",
            TrackerKind::Kcf => "kcf",
            TrackerKind::Greedy => "greedy",
            TrackerKind::CentralKalman => "central-kalman",
            TrackerKind::PerfectBlind => "perfect-blind",
        }
    }

    /// Whether this tracker consumes a Markov-chain model (vs. i.i.d.).
    pub fn wants_markov(self) -> bool {
        matches!(
            self,
            TrackerKind::Kcf | TrackerKind::CentralKalman | TrackerKind::PerfectBlind
        )
    }

    /// Whether this tracker needs a communication topology.
    pub fn wants_topology(self) -> bool {
        matches!(self, TrackerKind::DistIid | TrackerKind::Kcf)
    }
}

impl std::str::FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrackerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = TrackerKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown tracker `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

impl std::fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An i.i.d. process with scalar sensors, fully specified by its constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct IidSpec {
    /// Parametric family of the process.
    pub family: GaussianFamily,
    /// True parameter generating the data.
    pub theta_true: Vec<f64>,
    /// Observation-noise standard deviation of each sensor.
    pub sensor_sd: Vec<f64>,
}

impl IidSpec {
    pub fn build(&self) -> Result<IidModel> {
        if self.theta_true.len() != self.family.theta_dim() {
            return Err(Error::Config(format!(
                "theta-true has {} components, family needs {}",
                self.theta_true.len(),
                self.family.theta_dim()
            )));
        }
        if self.family.dim() != 1 {
            return Err(Error::Config("scenario sensors are scalar; use a scalar family".into()));
        }
        Ok(IidModel {
            family: self.family.clone(),
            theta_true: self.theta_true.clone(),
            sensors: self.sensor_sd.iter().map(|&sd| SensorModel::scalar(sd)).collect(),
        })
    }
}

/// A finite-state Markov chain with scalar state-dependent sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MarkovSpec {
    /// Row-stochastic transition rows: `transition[i][j] = P(i → j)`.
    pub transition: Vec<Vec<f64>>,
    /// `obs_mean[k][i]`: sensor k's mean reading in state i.
    pub obs_mean: Vec<Vec<f64>>,
    /// `obs_var[k][i]`: variance of that reading.
    pub obs_var: Vec<Vec<f64>>,
}

impl MarkovSpec {
    pub fn build(&self) -> Result<MarkovModel> {
        let s = self.transition.len();
        let mut obs_mean = Vec::with_capacity(self.obs_mean.len());
        let mut obs_cov = Vec::with_capacity(self.obs_var.len());
        if self.obs_mean.len() != self.obs_var.len() {
            return Err(Error::Config("obs-mean and obs-var sensor counts differ".into()));
        }
        for (k, (means, vars)) in self.obs_mean.iter().zip(&self.obs_var).enumerate() {
            if means.len() != s || vars.len() != s {
                return Err(Error::Config(format!(
                    "sensor {k} needs one mean and one variance per state ({s})"
                )));
            }
            if let Some(v) = vars.iter().find(|&&v| v <= 0.0) {
                return Err(Error::Config(format!("sensor {k} has non-positive variance {v}")));
            }
            obs_mean.push(DMatrix::from_row_slice(1, s, means));
            obs_cov.push(vars.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect());
        }
        MarkovModel::from_row_stochastic(&self.transition, obs_mean, obs_cov)
    }
}

/// The process-model half of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSpec {
    Iid(IidSpec),
    Markov(MarkovSpec),
}

impl ModelSpec {
    pub fn num_sensors(&self) -> usize {
        match self {
            ModelSpec::Iid(m) => m.sensor_sd.len(),
            ModelSpec::Markov(m) => m.obs_mean.len(),
        }
    }

    fn build_iid(&self) -> Result<IidModel> {
        match self {
            ModelSpec::Iid(spec) => spec.build(),
            ModelSpec::Markov(_) => Err(Error::Config(
                "this tracker runs on the i.i.d. model; scenario has a markov model".into(),
            )),
        }
    }

    fn build_markov(&self) -> Result<MarkovModel> {
        match self {
            ModelSpec::Markov(spec) => spec.build(),
            ModelSpec::Iid(_) => Err(Error::Config(
                "this tracker runs on the markov model; scenario has an i.i.d. model".into(),
            )),
        }
    }
}

/// Communication graph description (undirected edge list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TopologySpec {
    pub edges: Vec<(usize, usize)>,
    /// Uniform consensus gain applied by every node.
    pub consensus_gain: f64,
}

impl TopologySpec {
    pub fn build(&self, n: usize) -> Result<Topology> {
        Topology::from_edges(n, &self.edges, vec![self.consensus_gain; n])
    }
}

fn default_theta_box() -> (f64, f64) {
    (0.0, 1.0)
}

/// A complete, self-contained experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Scenario {
    /// Label used in output file names.
    pub name: String,
    pub tracker: TrackerKind,
    /// Slots per replication.
    pub slots: u64,
    /// One replication per seed.
    pub seeds: Vec<u64>,
    /// Inverse temperature of the configuration sampler.
    pub beta: f64,
    /// Target mean number of active sensors.
    pub n_bar: f64,
    /// Learning-update period `T`.
    pub period: u64,
    /// Initial activation price.
    pub lambda0: f64,
    /// Clamp for learned error tables; also the default price ceiling.
    pub a0: f64,
    /// Projection window for the price; defaults to `[0, a0]`.
    #[serde(default)]
    pub lambda_bounds: Option<(f64, f64)>,
    /// Sampler coordinate updates per slot.
    pub gibbs_sweeps: usize,
    /// Step-size rules for the learning recursions.
    pub schedules: StepSchedules,
    /// Initial parameter estimate (empty when the model has no parameter).
    #[serde(default)]
    pub theta0: Vec<f64>,
    /// Projection box for the parameter estimate.
    #[serde(default = "default_theta_box")]
    pub theta_box: (f64, f64),
    pub model: ModelSpec,
    /// Communication graph; required by the distributed trackers.
    #[serde(default)]
    pub topology: Option<TopologySpec>,
    /// Fixed sensor pair for the two-sensor Kalman baseline.
    #[serde(default)]
    pub kalman_sensors: Option<(usize, usize)>,
}

impl Scenario {
    pub fn num_sensors(&self) -> usize {
        self.model.num_sensors()
    }

    /// Price projection window, defaulting to `[0, a0]`.
    pub fn lambda_bounds(&self) -> (f64, f64) {
        self.lambda_bounds.unwrap_or((0.0, self.a0))
    }

    /// Checks everything that can be checked without running: name and seed
    /// list shape, model/tracker compatibility, step-size admissibility for
    /// the chosen tracker, and bounds on N̄ and the sensor count.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(Error::Config(format!(
                "scenario name {:?} must be non-empty and filename-safe (alphanumeric, -_.)",
                self.name
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("scenario needs at least one seed".into()));
        }
        let n = self.num_sensors();
        if n == 0 || n > MAX_SCENARIO_SENSORS.min(MAX_SENSORS) {
            return Err(Error::TooLarge(n, MAX_SCENARIO_SENSORS));
        }
        if !(0.0..=n as f64).contains(&self.n_bar) {
            return Err(Error::Config(format!("target count {} outside [0, {n}]", self.n_bar)));
        }
        if self.model_is_markov() != self.tracker.wants_markov() {
            return Err(Error::IncompatibleBaseline(format!(
                "tracker {} needs a {} model",
                self.tracker,
                if self.tracker.wants_markov() { "markov" } else { "iid" }
            )));
        }
        if self.tracker.wants_topology() && self.topology.is_none() {
            return Err(Error::Config(format!("tracker {} needs a topology", self.tracker)));
        }
        if let Some(spec) = &self.topology {
            spec.build(n)?;
        }
        // Surface model construction errors (shape mismatches, bad rows)
        // before any simulation starts.
        match (&self.model, self.model_is_markov()) {
            (ModelSpec::Iid(spec), _) => {
                spec.build()?;
            }
            (ModelSpec::Markov(spec), _) => {
                spec.build()?;
            }
        }
        let (lo, hi) = self.lambda_bounds();
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("price window [{lo}, {hi}] is not an interval")));
        }
        match self.tracker {
            TrackerKind::CentralKnown => self.schedules.a.validate_robbins_monro("a")?,
            TrackerKind::CentralUnknown | TrackerKind::CentralLowcomplex => {
                self.schedules.validate(false)?
            }
            TrackerKind::DistIid => self.schedules.validate(true)?,
            TrackerKind::Kcf => {
                self.schedules.a.validate_robbins_monro("a")?;
                self.schedules.b.validate_robbins_monro("b")?;
            }
            TrackerKind::Greedy | TrackerKind::CentralKalman | TrackerKind::PerfectBlind => {}
        }
        if self.requires_sampler() && self.gibbs_sweeps == 0 {
            return Err(Error::Config("sampler trackers need at least one sweep per slot".into()));
        }
        if self.requires_sampler() && self.period == 0 {
            return Err(Error::Config("learning period must be at least 1".into()));
        }
        Ok(())
    }

    fn model_is_markov(&self) -> bool {
        matches!(self.model, ModelSpec::Markov(_))
    }

    fn requires_sampler(&self) -> bool {
        !matches!(
            self.tracker,
            TrackerKind::Greedy | TrackerKind::CentralKalman | TrackerKind::PerfectBlind
        )
    }

    /// Instantiates the tracker for one replication seed.
    pub fn build_tracker(&self, seed: u64) -> Result<Box<dyn Tracker>> {
        let seeds = SeedTree::new(seed);
        match self.tracker {
            TrackerKind::CentralKnown | TrackerKind::CentralUnknown | TrackerKind::CentralLowcomplex => {
                let mode = match self.tracker {
                    TrackerKind::CentralKnown => CentralMode::KnownTheta,
                    TrackerKind::CentralUnknown => CentralMode::FullUpdate,
                    _ => CentralMode::LowComplexity,
                };
                let params = CentralParams {
                    mode,
                    beta: self.beta,
                    n_bar: self.n_bar,
                    period: self.period,
                    schedules: self.schedules,
                    lambda0: self.lambda0,
                    lambda_bounds: self.lambda_bounds(),
                    a0: self.a0,
                    theta0: self.theta0.clone(),
                    theta_box: self.theta_box,
                    gibbs_sweeps: self.gibbs_sweeps,
                };
                Ok(Box::new(CentralTracker::new(self.model.build_iid()?, params, &seeds)?))
            }
            TrackerKind::DistIid => {
                let n = self.num_sensors();
                let topology = self.require_topology()?.build(n)?;
                let params = DistIidParams {
                    beta: self.beta,
                    n_bar: self.n_bar,
                    period: self.period,
                    schedules: self.schedules,
                    lambda0: self.lambda0,
                    lambda_bounds: self.lambda_bounds(),
                    a0: self.a0,
                    theta0: self.theta0.clone(),
                    theta_box: self.theta_box,
                    gibbs_sweeps: self.gibbs_sweeps,
                };
                Ok(Box::new(DistIidTracker::new(self.model.build_iid()?, topology, params, &seeds)?))
            }
            TrackerKind::Kcf => {
                let n = self.num_sensors();
                let topology = self.require_topology()?.build(n)?;
                let params = KcfParams {
                    beta: self.beta,
                    n_bar: self.n_bar,
                    period: self.period,
                    schedules: self.schedules,
                    lambda0: self.lambda0,
                    lambda_bounds: self.lambda_bounds(),
                    a0: self.a0,
                    gibbs_sweeps: self.gibbs_sweeps,
                };
                Ok(Box::new(KcfTracker::new(self.model.build_markov()?, topology, params, &seeds)?))
            }
            TrackerKind::Greedy => {
                let count = self.n_bar.round() as usize;
                Ok(Box::new(GreedyTracker::new(
                    self.model.build_iid()?,
                    count,
                    self.theta0.clone(),
                    &seeds,
                )?))
            }
            TrackerKind::CentralKalman => {
                let pair = self.kalman_sensors.unwrap_or((0, 1));
                Ok(Box::new(CentralKalmanTracker::new(self.model.build_markov()?, pair, &seeds)?))
            }
            TrackerKind::PerfectBlind => {
                Ok(Box::new(PerfectBlindTracker::new(self.model.build_markov()?, &seeds)))
            }
        }
    }

    fn require_topology(&self) -> Result<&TopologySpec> {
        self.topology
            .as_ref()
            .ok_or_else(|| Error::Config(format!("tracker {} needs a topology", self.tracker)))
    }

    /// Short content hash of the scenario: 16 hex digits of the SHA-256 of
    /// its canonical JSON form. Any field change changes the hash.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serializing scenario: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(format!("parsing scenario: {e}")))?;
        Ok(scenario)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

/// The standard step-size set used by both presets: table steps
/// `1/t^0.6`, price steps `2/t^0.8`, parameter steps `1/t`, probe `0.2/t^0.1`.
pub fn preset_schedules() -> StepSchedules {
    StepSchedules {
        a: StepRule { coeff: 1.0, exp: 0.6 },
        b: StepRule { coeff: 2.0, exp: 0.8 },
        c: StepRule { coeff: 1.0, exp: 1.0 },
        d: StepRule { coeff: 0.2, exp: 0.1 },
    }
}

/// Five-sensor i.i.d. preset: scalar process `X ~ N(θ₀, (1−θ₀)²)` with
/// θ₀ = 0.5, sensor noise levels drawn once from `U[0, 0.5]` and embedded,
/// target of two active sensors, β = 150, learning every 20 slots.
pub fn iid_preset() -> Scenario {
    let n = 5;
    let mut rng = SeedTree::new(PRESET_SEED).stream("preset/iid-sensor-sd");
    let sensor_sd: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 0.5).collect();
    Scenario {
        name: "iid-preset".into(),
        tracker: TrackerKind::CentralUnknown,
        slots: 100_000,
        seeds: (1..=20).collect(),
        beta: 150.0,
        n_bar: 2.0,
        period: 20,
        lambda0: 0.1,
        a0: 2.5,
        lambda_bounds: None,
        gibbs_sweeps: 10,
        schedules: preset_schedules(),
        theta0: vec![0.2],
        theta_box: (0.0, 0.8),
        model: ModelSpec::Iid(IidSpec {
            family: GaussianFamily::ScalarCoupled,
            theta_true: vec![0.5],
            sensor_sd,
        }),
        topology: Some(TopologySpec {
            edges: (0..n - 1).map(|i| (i, i + 1)).collect(),
            consensus_gain: 0.1,
        }),
        kalman_sensors: None,
    }
}

/// Five-node Markov preset on a line network: four hidden states, a random
/// row-stochastic transition matrix, sensor means drawn from `U[0,1]`, and
/// variances `0.05·(1+|k−i|)`. `instance` seeds the drawn constants, so each
/// value yields a different member of the same problem family.
pub fn markov_preset(instance: u64) -> Scenario {
    let n = 5;
    let states = 4;
    let tree = SeedTree::new(PRESET_SEED ^ instance.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut rng = tree.stream("preset/markov-instance");
    let transition: Vec<Vec<f64>> = (0..states)
        .map(|_| {
            let raw: Vec<f64> = (0..states).map(|_| rng.gen::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|v| v / sum).collect()
        })
        .collect();
    let obs_mean: Vec<Vec<f64>> =
        (0..n).map(|_| (0..states).map(|_| rng.gen::<f64>()).collect()).collect();
    let obs_var: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..states).map(|i| 0.05 * (1.0 + (k as f64 - i as f64).abs())).collect())
        .collect();
    Scenario {
        name: format!("markov-preset-{instance}"),
        tracker: TrackerKind::Kcf,
        slots: 100_000,
        seeds: vec![1],
        beta: 150.0,
        n_bar: 2.0,
        period: 20,
        lambda0: 0.1,
        a0: 7.5,
        lambda_bounds: None,
        gibbs_sweeps: 10,
        schedules: preset_schedules(),
        theta0: vec![],
        theta_box: (0.0, 1.0),
        model: ModelSpec::Markov(MarkovSpec { transition, obs_mean, obs_var }),
        topology: Some(TopologySpec {
            edges: (0..n - 1).map(|i| (i, i + 1)).collect(),
            consensus_gain: 0.1,
        }),
        kalman_sensors: Some((0, 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_build() {
        let iid = iid_preset();
        iid.validate().unwrap();
        iid.build_tracker(1).unwrap();
        let markov = markov_preset(3);
        markov.validate().unwrap();
        markov.build_tracker(1).unwrap();
    }

    #[test]
    fn every_tracker_kind_builds_on_its_preset() {
        for kind in TrackerKind::ALL {
            let mut s = if kind.wants_markov() { markov_preset(1) } else { iid_preset() };
            s.tracker = kind;
            s.validate().unwrap_or_else(|e| panic!("{kind}: {e}"));
            let tracker = s.build_tracker(1).unwrap_or_else(|e| panic!("{kind}: {e}"));
            assert_eq!(tracker.extra_columns().len(), tracker.extra_columns().len());
        }
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        for scenario in [iid_preset(), markov_preset(2)] {
            let text = scenario.to_toml().unwrap();
            let back = Scenario::from_toml(&text).unwrap();
            assert_eq!(back, scenario);
            assert_eq!(back.hash(), scenario.hash());
        }
    }

    #[test]
    fn tracker_names_round_trip() {
        for kind in TrackerKind::ALL {
            assert_eq!(kind.name().parse::<TrackerKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<TrackerKind>().is_err());
    }

    #[test]
    fn hash_tracks_semantic_changes() {
        let base = iid_preset();
        let h0 = base.hash();
        assert_eq!(h0.len(), 16);
        assert_eq!(h0, iid_preset().hash(), "hash is deterministic");

        let mut changed = base.clone();
        changed.beta = 151.0;
        assert_ne!(changed.hash(), h0);

        let mut changed = base.clone();
        changed.slots += 1;
        assert_ne!(changed.hash(), h0);

        let mut changed = base.clone();
        changed.schedules.a.coeff = 1.5;
        assert_ne!(changed.hash(), h0);
    }

    #[test]
    fn model_tracker_mismatch_is_rejected_before_running() {
        let mut s = iid_preset();
        s.tracker = TrackerKind::Kcf;
        assert!(matches!(s.validate(), Err(Error::IncompatibleBaseline(_))));
        let mut s = markov_preset(1);
        s.tracker = TrackerKind::CentralUnknown;
        assert!(matches!(s.validate(), Err(Error::IncompatibleBaseline(_))));
    }

    #[test]
    fn structural_problems_are_rejected() {
        let mut s = iid_preset();
        s.n_bar = 9.0;
        assert!(s.validate().is_err());

        let mut s = iid_preset();
        s.seeds.clear();
        assert!(s.validate().is_err());

        let mut s = iid_preset();
        s.name = "no spaces allowed".into();
        assert!(s.validate().is_err());

        let mut s = iid_preset();
        s.tracker = TrackerKind::DistIid;
        s.topology = None;
        assert!(s.validate().is_err());

        // Inadmissible step sizes surface through validation, not at run time.
        let mut s = iid_preset();
        s.schedules.b.exp = 0.4;
        assert!(matches!(s.validate(), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn markov_instances_differ_but_are_reproducible() {
        let a = markov_preset(1);
        let b = markov_preset(2);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(markov_preset(1).hash(), a.hash());
        // Variance ladder: sensor k in state i has variance 0.05 (1 + |k−i|).
        if let ModelSpec::Markov(spec) = &a.model {
            assert!((spec.obs_var[2][0] - 0.15).abs() < 1e-15);
            assert!((spec.obs_var[0][0] - 0.05).abs() < 1e-15);
        } else {
            panic!("markov preset must carry a markov model");
        }
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let mut text = iid_preset().to_toml().unwrap();
        text.push_str("\nmystery-knob = 3\n");
        assert!(Scenario::from_toml(&text).is_err());
    }
}
