//! Reference policies the adaptive trackers are measured against.
//!
//! Each baseline implements [`Tracker`] and consumes the shared random
//! streams in the same per-slot order as the adaptive trackers (process
//! draw first, then one draw per sensor stream where applicable), so a
//! baseline run under the same master seed sees the *same* sample path as
//! the tracker it is compared to — differences in the metric columns are
//! attributable to the policy alone.
//!
//! - [`GreedyTracker`] — activate the first `N̄` sensors forever and
//!   estimate under a frozen (wrong) parameter guess; the static strawman.
//! - [`CentralKalmanTracker`] — a fusion-center Kalman filter on the
//!   Markov-chain system reading two fixed sensors every slot.
//! - [`PerfectBlindTracker`] — told the previous state exactly but allowed
//!   no observation; its long-run error has the closed form
//!   [`perfect_blind_limit`].

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha12Rng;

use crate::estimate::gaussian_posterior;
use crate::model::{Configuration, IidModel, MarkovModel};
use crate::rng::{obs_stream, SeedTree, STREAM_PROCESS};
use crate::tracker::{kcf_update, KcfNodeState, SlotRecord, Tracker};
use crate::{Error, Result};

/// Fixed-subset, frozen-parameter straw man for the i.i.d. process.
pub struct GreedyTracker {
    model: IidModel,
    config: Configuration,
    theta: Vec<f64>,
    t: u64,
    process_rng: ChaCha12Rng,
    obs_rngs: Vec<ChaCha12Rng>,
    obs: Vec<DVector<f64>>,
}

impl GreedyTracker {
    /// Activates sensors `0..count` forever and estimates under `theta0`,
    /// never updating either.
    pub fn new(model: IidModel, count: usize, theta0: Vec<f64>, seeds: &SeedTree) -> Result<Self> {
        let n = model.num_sensors();
        if count > n {
            return Err(Error::Config(format!("cannot hold {count} of {n} sensors active")));
        }
        let mut config = Configuration::zeros(n);
        for k in 0..count {
            config.set(k, true);
        }
        let obs = model.sensors.iter().map(|s| DVector::zeros(s.h.nrows())).collect();
        Ok(Self {
            process_rng: seeds.stream(STREAM_PROCESS),
            obs_rngs: (0..n).map(|k| seeds.stream(&obs_stream(k))).collect(),
            model,
            config,
            theta: theta0,
            t: 0,
            obs,
        })
    }
}

impl Tracker for GreedyTracker {
    fn theta_dim(&self) -> usize {
        self.model.family.theta_dim()
    }

    fn step(&mut self) -> Result<SlotRecord> {
        let x = self.model.sample_state(&mut self.process_rng);
        for k in 0..self.model.num_sensors() {
            self.obs[k] = self.model.sensors[k].observe(&x, &mut self.obs_rngs[k]);
        }
        let posterior =
            gaussian_posterior(&self.model.family, &self.model.sensors, self.config, &self.obs, &self.theta)?;
        let record = SlotRecord {
            t: self.t,
            mse: (&x - &posterior.mean).norm_squared(),
            active: self.config.active_count(),
            lambda: 0.0,
            theta: self.theta.clone(),
            extra_reads: 0,
            extras: Vec::new(),
        };
        self.t += 1;
        Ok(record)
    }
}

/// Fusion-center Kalman filter on the Markov-chain system, reading two
/// fixed sensors every slot.
pub struct CentralKalmanTracker {
    model: MarkovModel,
    sensors: (usize, usize),
    /// Single "node" holding the stacked two-sensor filter.
    node: KcfNodeState,
    q_per_state: Vec<DMatrix<f64>>,
    state: usize,
    t: u64,
    process_rng: ChaCha12Rng,
    obs_rngs: Vec<ChaCha12Rng>,
}

impl CentralKalmanTracker {
    pub fn new(model: MarkovModel, sensors: (usize, usize), seeds: &SeedTree) -> Result<Self> {
        let n = model.num_sensors();
        let s = model.num_states();
        if sensors.0 >= n || sensors.1 >= n || sensors.0 == sensors.1 {
            return Err(Error::IncompatibleBaseline(format!(
                "needs two distinct sensors below {n}, got {:?}",
                sensors
            )));
        }
        // Stack the two sensors into one observation block.
        let (r0, r1) = (model.obs_mean[sensors.0].nrows(), model.obs_mean[sensors.1].nrows());
        let mut h = DMatrix::zeros(r0 + r1, s);
        h.view_mut((0, 0), (r0, s)).copy_from(&model.obs_mean[sensors.0]);
        h.view_mut((r0, 0), (r1, s)).copy_from(&model.obs_mean[sensors.1]);
        let sigmas: Vec<DMatrix<f64>> = (0..s)
            .map(|i| {
                let mut sig = DMatrix::zeros(r0 + r1, r0 + r1);
                sig.view_mut((0, 0), (r0, r0)).copy_from(&model.obs_cov[sensors.0][i]);
                sig.view_mut((r0, r0), (r1, r1)).copy_from(&model.obs_cov[sensors.1][i]);
                sig
            })
            .collect();
        let node = KcfNodeState::new(h, sigmas, 0.0);
        let q_per_state = (0..s).map(|i| model.system_noise_cov(i)).collect();
        let mut process_rng = seeds.stream(STREAM_PROCESS);
        let state = sample_stationary(&model, &mut process_rng);
        Ok(Self {
            obs_rngs: (0..n).map(|k| seeds.stream(&obs_stream(k))).collect(),
            process_rng,
            model,
            sensors,
            node,
            q_per_state,
            state,
            t: 0,
        })
    }

    /// The filter's current belief vector.
    pub fn belief(&self) -> &DVector<f64> {
        &self.node.xhat
    }
}

impl Tracker for CentralKalmanTracker {
    fn theta_dim(&self) -> usize {
        0
    }

    fn step(&mut self) -> Result<SlotRecord> {
        let n = self.model.num_sensors();
        // Every sensor stream advances even though only two are read.
        let mut readings = Vec::with_capacity(n);
        for k in 0..n {
            readings.push(self.model.observe(k, self.state, &mut self.obs_rngs[k]));
        }
        let (i0, i1) = self.sensors;
        let mut z = DVector::zeros(readings[i0].len() + readings[i1].len());
        z.rows_mut(0, readings[i0].len()).copy_from(&readings[i0]);
        z.rows_mut(readings[i0].len(), readings[i1].len()).copy_from(&readings[i1]);

        kcf_update(&mut self.node, i0, Some(&z), &[], &self.model.a, &self.q_per_state)?;

        let truth = DVector::from_fn(self.model.num_states(), |i, _| {
            if i == self.state { 1.0 } else { 0.0 }
        });
        let record = SlotRecord {
            t: self.t,
            mse: (&self.node.xhat - &truth).norm_squared(),
            active: 2,
            lambda: 0.0,
            theta: Vec::new(),
            extra_reads: 0,
            extras: Vec::new(),
        };
        self.state = self.model.sample_next(self.state, &mut self.process_rng);
        self.t += 1;
        Ok(record)
    }
}

/// Estimator that is handed the previous state exactly but may not observe:
/// its best prediction is the transition column `A e_{i(t−1)}`.
pub struct PerfectBlindTracker {
    model: MarkovModel,
    stationary: DVector<f64>,
    state: usize,
    prev: Option<usize>,
    t: u64,
    process_rng: ChaCha12Rng,
}

impl PerfectBlindTracker {
    pub fn new(model: MarkovModel, seeds: &SeedTree) -> Self {
        let mut process_rng = seeds.stream(STREAM_PROCESS);
        let state = sample_stationary(&model, &mut process_rng);
        Self {
            stationary: model.stationary(),
            model,
            state,
            prev: None,
            t: 0,
            process_rng,
        }
    }
}

impl Tracker for PerfectBlindTracker {
    fn theta_dim(&self) -> usize {
        0
    }

    fn step(&mut self) -> Result<SlotRecord> {
        // First slot has no previous state; the stationary law is the best
        // blind prediction.
        let xhat = match self.prev {
            Some(prev) => self.model.a.column(prev).into_owned(),
            None => self.stationary.clone(),
        };
        let truth = DVector::from_fn(self.model.num_states(), |i, _| {
            if i == self.state { 1.0 } else { 0.0 }
        });
        let record = SlotRecord {
            t: self.t,
            mse: (&xhat - &truth).norm_squared(),
            active: 0,
            lambda: 0.0,
            theta: Vec::new(),
            extra_reads: 0,
            extras: Vec::new(),
        };
        self.prev = Some(self.state);
        self.state = self.model.sample_next(self.state, &mut self.process_rng);
        self.t += 1;
        Ok(record)
    }
}

/// The long-run error of the blind predictor in closed form:
/// `Σ_i π_i · E‖X(t) − A X(t−1)‖²_{X(t−1)=e_i} = Σ_i π_i · Tr Q^{(i)}
/// = Σ_i π_i (1 − ‖A e_i‖²)`.
pub fn perfect_blind_limit(model: &MarkovModel) -> f64 {
    let pi = model.stationary();
    (0..model.num_states())
        .map(|i| pi[i] * (1.0 - model.a.column(i).norm_squared()))
        .sum()
}

pub(crate) fn sample_stationary(model: &MarkovModel, rng: &mut impl rand::Rng) -> usize {
    let pi = model.stationary();
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for i in 0..pi.len() {
        acc += pi[i];
        if u < acc {
            return i;
        }
    }
    pi.len() - 1
}
