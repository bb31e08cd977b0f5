//! Centralized tracking of the i.i.d. process.
//!
//! One fusion center runs a single Gibbs chain over configurations. Three
//! modes share the slot loop and differ only in what they learn:
//!
//! - **known parameter** — the error table is exact (computed once from the
//!   model) and only the activation price λ adapts, from the *previous*
//!   slot's active count on the `a` schedule;
//! - **full update** — the parameter θ and the whole error table are
//!   unknown; every `T`-th slot all sensors are read, every table entry is
//!   pulled toward its error proxy with step `a(ν)`, and θ takes one SPSA
//!   ascent step on the full-read log-likelihood with step `c(ν)`. λ adapts
//!   every slot from the *current* count on the `b` schedule;
//! - **low complexity** — no extra sensors are ever read: every `T`-th slot
//!   only the entry of the currently-sampled configuration is updated (with
//!   per-configuration step counters), and the θ ascent uses the likelihood
//!   of the active observations alone.
//!
//! The two λ conventions (previous vs. current count) are deliberate; they
//! match the respective update equations exactly.

use nalgebra::DVector;
use rand_chacha::ChaCha12Rng;

use crate::estimate::{conditional_mse, gaussian_posterior, marginal_log_likelihood, y_b_proxy};
use crate::gibbs::{gibbs_step, EnergyTable, GibbsChainState};
use crate::model::{Configuration, IidModel};
use crate::rng::{obs_stream, SeedTree, STREAM_PROCESS, STREAM_SPSA_THETA};
use crate::sa::{price_step, rademacher, spsa_gradient, StepSchedules};
use crate::tracker::{SlotRecord, Tracker};
use crate::{Error, Result};

/// Which learning problem the centralized tracker solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralMode {
    /// Process parameter known: exact error table, price adaptation only.
    KnownTheta,
    /// Parameter unknown; periodic full reads update every table entry and θ.
    FullUpdate,
    /// Parameter unknown; periodic updates touch only the sampled entry and
    /// never read beyond the active subset.
    LowComplexity,
}

/// Configuration of a [`CentralTracker`].
#[derive(Debug, Clone, PartialEq)]
pub struct CentralParams {
    pub mode: CentralMode,
    /// Inverse temperature of the configuration sampler.
    pub beta: f64,
    /// Target mean number of active sensors.
    pub n_bar: f64,
    /// Learning-update period `T` (every `T`-th slot starting at 0).
    pub period: u64,
    /// Step-size rules (see [`StepSchedules`] for the roles).
    pub schedules: StepSchedules,
    /// Initial activation price.
    pub lambda0: f64,
    /// Projection window for λ; must contain the equilibrium price.
    pub lambda_bounds: (f64, f64),
    /// Clamp `A₀` for learned error-table entries.
    pub a0: f64,
    /// Initial parameter estimate (ignored in known-parameter mode).
    pub theta0: Vec<f64>,
    /// Projection box `Θ` for the parameter estimate.
    pub theta_box: (f64, f64),
    /// Sampler coordinate updates per slot.
    pub gibbs_sweeps: usize,
}

/// Centralized tracking loop over an i.i.d. process.
pub struct CentralTracker {
    model: IidModel,
    params: CentralParams,
    table: EnergyTable,
    chain: GibbsChainState,
    theta: Vec<f64>,
    t: u64,
    /// Learning events fired so far (full reads, or periodic updates in
    /// low-complexity mode).
    nu: usize,
    /// Per-configuration update counters (low-complexity mode).
    nu_b: Vec<usize>,
    /// `‖B(t−1)‖₁` for the known-parameter price update.
    prev_active: usize,
    process_rng: ChaCha12Rng,
    obs_rngs: Vec<ChaCha12Rng>,
    spsa_rng: ChaCha12Rng,
    /// Scratch: latest observation of every sensor (all sensors draw each
    /// slot so that sample paths are paired across trackers and modes).
    obs: Vec<DVector<f64>>,
}

impl CentralTracker {
    pub fn new(model: IidModel, params: CentralParams, seeds: &SeedTree) -> Result<Self> {
        let n = model.num_sensors();
        if params.n_bar < 0.0 || params.n_bar > n as f64 {
            return Err(Error::Config(format!(
                "target count {} outside [0, {n}]",
                params.n_bar
            )));
        }
        if params.period == 0 {
            return Err(Error::Config("learning period must be at least 1".into()));
        }
        match params.mode {
            CentralMode::KnownTheta => params.schedules.a.validate_robbins_monro("a")?,
            _ => params.schedules.validate(false)?,
        }

        let theta = match params.mode {
            CentralMode::KnownTheta => model.theta_true.clone(),
            _ => params.theta0.clone(),
        };
        let mut table = EnergyTable::constant(n, 0.0, params.lambda0);
        if params.mode == CentralMode::KnownTheta {
            for b in Configuration::all(n) {
                table.set_f(b, conditional_mse(&model.family, &model.sensors, b, &model.theta_true)?);
            }
        }
        let chain = GibbsChainState::new(Configuration::zeros(n), seeds);
        let obs = model.sensors.iter().map(|s| DVector::zeros(s.h.nrows())).collect();
        Ok(Self {
            obs_rngs: (0..n).map(|k| seeds.stream(&obs_stream(k))).collect(),
            process_rng: seeds.stream(STREAM_PROCESS),
            spsa_rng: seeds.stream(STREAM_SPSA_THETA),
            model,
            params,
            table,
            chain,
            theta,
            t: 0,
            nu: 0,
            nu_b: vec![0; 1 << n],
            prev_active: 0,
            obs,
        })
    }

    /// Current learned (or exact) energy table.
    pub fn table(&self) -> &EnergyTable {
        &self.table
    }

    /// Current parameter estimate.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Learning events fired so far.
    pub fn nu(&self) -> usize {
        self.nu
    }

    /// Per-configuration learning-event counters.
    pub fn nu_b(&self) -> &[usize] {
        &self.nu_b
    }

    /// The configuration the sampler currently holds.
    pub fn current_config(&self) -> Configuration {
        self.chain.current()
    }

    /// Overwrites the error-table values, keeping the current price.
    ///
    /// Useful for starting a learning run from a known table, e.g. warm
    /// starts or comparing learning modes from a common fixed point.
    pub fn seed_table(&mut self, f: &[f64]) {
        let n = self.model.num_sensors();
        assert_eq!(f.len(), 1 << n, "need one table entry per configuration");
        for b in Configuration::all(n) {
            self.table.set_f(b, f[b.index()]);
        }
    }

    fn fires_this_slot(&self) -> bool {
        self.t % self.params.period == 0
    }

    /// One SPSA ascent step of θ on the log-likelihood of the observations
    /// that `b` makes available.
    fn theta_ascent(&mut self, b: Configuration) -> Result<()> {
        let dim = self.theta.len();
        if dim == 0 {
            return Ok(());
        }
        let delta = rademacher(dim, &mut self.spsa_rng);
        let probe = self.params.schedules.d.at(self.nu);
        let (family, sensors, obs) = (&self.model.family, &self.model.sensors, &self.obs);
        let grad = spsa_gradient(&self.theta, probe, &delta, |theta| {
            marginal_log_likelihood(family, sensors, b, obs, theta)
        })?;
        let step = self.params.schedules.c.at(self.nu);
        crate::sa::ascent_step(&mut self.theta, &grad, step, self.params.theta_box);
        Ok(())
    }
}

impl Tracker for CentralTracker {
    fn theta_dim(&self) -> usize {
        self.model.family.theta_dim()
    }

    fn step(&mut self) -> Result<SlotRecord> {
        let n = self.model.num_sensors();
        let p = self.params.clone();

        // Select B(t).
        for _ in 0..p.gibbs_sweeps {
            gibbs_step(&mut self.chain, &self.table, p.beta)?;
        }
        let b = self.chain.current();

        // The world moves: process draw, then one reading per sensor.
        let x = self.model.sample_state(&mut self.process_rng);
        for k in 0..n {
            self.obs[k] = self.model.sensors[k].observe(&x, &mut self.obs_rngs[k]);
        }

        // Estimate from the active observations under the current parameter.
        let posterior = gaussian_posterior(&self.model.family, &self.model.sensors, b, &self.obs, &self.theta)?;
        let mse = (&x - &posterior.mean).norm_squared();

        // Price update: previous-slot count in known-parameter mode (rule
        // `a`), current count otherwise (rule `b`).
        let lambda = match p.mode {
            CentralMode::KnownTheta => price_step(
                self.table.lambda(),
                p.schedules.a.at(self.t as usize),
                self.prev_active,
                p.n_bar,
                p.lambda_bounds.0,
                p.lambda_bounds.1,
            ),
            _ => price_step(
                self.table.lambda(),
                p.schedules.b.at(self.t as usize),
                b.active_count(),
                p.n_bar,
                p.lambda_bounds.0,
                p.lambda_bounds.1,
            ),
        };
        self.table.set_lambda(lambda);
        self.prev_active = b.active_count();

        // Learning updates on every T-th slot.
        let mut extra_reads = 0;
        if p.mode != CentralMode::KnownTheta && self.fires_this_slot() {
            match p.mode {
                CentralMode::FullUpdate => {
                    // Full read: every sensor's reading becomes available.
                    extra_reads = n;
                    let step = p.schedules.a.at(self.nu);
                    for cfg in Configuration::all(n) {
                        let y = y_b_proxy(&self.model.family, &self.model.sensors, cfg, &self.obs, &self.theta)?;
                        let f = crate::sa::table_step(self.table.f(cfg), step, y, 0.0, p.a0);
                        self.table.set_f(cfg, f);
                    }
                    self.theta_ascent(Configuration::ones(n))?;
                }
                CentralMode::LowComplexity => {
                    // Touch only the sampled entry; look only at Z_{B(t)}.
                    let step = p.schedules.a.at(self.nu_b[b.index()]);
                    let y = y_b_proxy(&self.model.family, &self.model.sensors, b, &self.obs, &self.theta)?;
                    let f = crate::sa::table_step(self.table.f(b), step, y, 0.0, p.a0);
                    self.table.set_f(b, f);
                    self.nu_b[b.index()] += 1;
                    self.theta_ascent(b)?;
                }
                CentralMode::KnownTheta => unreachable!(),
            }
            self.nu += 1;
        }

        let record = SlotRecord {
            t: self.t,
            mse,
            active: b.active_count(),
            lambda,
            theta: self.theta.clone(),
            extra_reads,
            extras: Vec::new(),
        };
        self.t += 1;
        Ok(record)
    }
}
