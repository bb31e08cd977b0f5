//! Distributed tracking of the i.i.d. process with learned consensus gains.
//!
//! There is no fusion center. Every node runs its own copy of the Gibbs
//! sampler seeded identically, so all nodes sample the *same* configuration
//! every slot without exchanging a single selection message. Estimation is
//! then local-plus-one-exchange: node `k` forms an initial estimate from
//! its own reading (or the prior if it was inactive), broadcasts it once,
//! and the final estimates are the rows of `X̂ = K_B X̄`, where `K_B` is a
//! topology-sparse gain matrix kept per configuration.
//!
//! Learning happens on every `T`-th slot from a full sensor read: each
//! error-table entry is pulled toward the network error proxy `Y_{K_B}` of
//! its configuration, the sampled configuration's gain matrix takes one
//! SPSA descent step on that proxy (perturbing only supported entries, so
//! off-topology entries stay exactly zero), and the parameter estimate
//! ascends the full-read log-likelihood exactly as in the centralized
//! tracker. With one node and the identity gain, every iterate of this
//! tracker reproduces the centralized one slot for slot.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha12Rng;

use crate::estimate::{check_sparsity, local_initial_estimates, marginal_log_likelihood, y_kb_proxy};
use crate::gibbs::{gibbs_step, EnergyTable, GibbsChainState};
use crate::model::{Configuration, IidModel, Topology};
use crate::rng::{obs_stream, SeedTree, STREAM_PROCESS, STREAM_SPSA_GAIN, STREAM_SPSA_THETA};
use crate::sa::{gain_descent_step, price_step, rademacher, spsa_gradient, table_step, StepSchedules};
use crate::tracker::{SlotRecord, Tracker};
use crate::{Error, Result};

/// One consensus round: every node's final estimate is its gain-weighted
/// combination of the broadcast initial estimates, `X̂ = K_B X̄`.
pub fn consensus_combine(k_b: &DMatrix<f64>, initial: &DVector<f64>, topology: &Topology) -> Result<DVector<f64>> {
    check_sparsity(k_b, topology)?;
    Ok(k_b * initial)
}

/// Configuration of a [`DistIidTracker`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistIidParams {
    /// Inverse temperature of the configuration sampler.
    pub beta: f64,
    /// Target mean number of active sensors.
    pub n_bar: f64,
    /// Learning-update period `T`.
    pub period: u64,
    /// Step-size rules; the gain descent runs on `b` with probe `d`.
    pub schedules: StepSchedules,
    /// Initial activation price.
    pub lambda0: f64,
    /// Projection window for λ.
    pub lambda_bounds: (f64, f64),
    /// Clamp `A₀` for table entries and gain-matrix entries.
    pub a0: f64,
    /// Initial parameter estimate.
    pub theta0: Vec<f64>,
    /// Projection box `Θ`.
    pub theta_box: (f64, f64),
    /// Sampler coordinate updates per slot (per node, in lockstep).
    pub gibbs_sweeps: usize,
}

/// Distributed tracking loop over an i.i.d. scalar process.
pub struct DistIidTracker {
    model: IidModel,
    topology: Topology,
    params: DistIidParams,
    table: EnergyTable,
    /// One sampler per node, all seeded identically.
    chains: Vec<GibbsChainState>,
    /// Per-configuration consensus gains, indexed by configuration index.
    gains: Vec<DMatrix<f64>>,
    /// Supported gain entries (topology edges plus the diagonal).
    support: Vec<(usize, usize)>,
    theta: Vec<f64>,
    t: u64,
    /// Full reads fired so far.
    nu: usize,
    /// Per-configuration gain-update counters.
    nu_b: Vec<usize>,
    process_rng: ChaCha12Rng,
    obs_rngs: Vec<ChaCha12Rng>,
    spsa_theta_rng: ChaCha12Rng,
    spsa_gain_rng: ChaCha12Rng,
    obs: Vec<DVector<f64>>,
}

impl DistIidTracker {
    pub fn new(model: IidModel, topology: Topology, params: DistIidParams, seeds: &SeedTree) -> Result<Self> {
        let n = model.num_sensors();
        if model.dim() != 1 {
            return Err(Error::Config(
                "distributed consensus estimation requires a scalar process".into(),
            ));
        }
        if topology.len() != n {
            return Err(Error::Config(format!(
                "topology has {} nodes but the model has {n} sensors",
                topology.len()
            )));
        }
        topology.validate()?;
        if params.n_bar < 0.0 || params.n_bar > n as f64 {
            return Err(Error::Config(format!("target count {} outside [0, {n}]", params.n_bar)));
        }
        if params.period == 0 {
            return Err(Error::Config("learning period must be at least 1".into()));
        }
        params.schedules.validate(true)?;

        let table = EnergyTable::constant(n, 0.0, params.lambda0);
        let chains = (0..n)
            .map(|_| GibbsChainState::new(Configuration::zeros(n), seeds))
            .collect();
        let gains = vec![DMatrix::identity(n, n); 1 << n];
        let obs = model.sensors.iter().map(|s| DVector::zeros(s.h.nrows())).collect();
        Ok(Self {
            support: topology.gain_support(),
            process_rng: seeds.stream(STREAM_PROCESS),
            obs_rngs: (0..n).map(|k| seeds.stream(&obs_stream(k))).collect(),
            spsa_theta_rng: seeds.stream(STREAM_SPSA_THETA),
            spsa_gain_rng: seeds.stream(STREAM_SPSA_GAIN),
            theta: params.theta0.clone(),
            model,
            topology,
            params,
            table,
            chains,
            gains,
            t: 0,
            nu: 0,
            nu_b: vec![0; 1 << n],
            obs,
        })
    }

    /// Current learned energy table.
    pub fn table(&self) -> &EnergyTable {
        &self.table
    }

    /// Current parameter estimate.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// The gain matrix currently learned for `b`.
    pub fn gain(&self, b: Configuration) -> &DMatrix<f64> {
        &self.gains[b.index()]
    }

    /// What each node's sampler currently holds; identical entries are the
    /// shared-seed guarantee.
    pub fn node_configs(&self) -> Vec<Configuration> {
        self.chains.iter().map(|c| c.current()).collect()
    }
}

impl Tracker for DistIidTracker {
    fn theta_dim(&self) -> usize {
        self.model.family.theta_dim()
    }

    fn extra_columns(&self) -> Vec<String> {
        (0..self.model.num_sensors()).map(|k| format!("mse_node_{k}")).collect()
    }

    fn step(&mut self) -> Result<SlotRecord> {
        let n = self.model.num_sensors();
        let p = self.params.clone();

        // Every node advances its own identically-seeded sampler.
        for _ in 0..p.gibbs_sweeps {
            for chain in &mut self.chains {
                gibbs_step(chain, &self.table, p.beta)?;
            }
        }
        let b = self.chains[0].current();
        debug_assert!(
            self.chains.iter().all(|c| c.current() == b),
            "shared-seed chains diverged"
        );

        let x = self.model.sample_state(&mut self.process_rng);
        for k in 0..n {
            self.obs[k] = self.model.sensors[k].observe(&x, &mut self.obs_rngs[k]);
        }

        // Local estimates, one broadcast, consensus combine.
        let xbar = local_initial_estimates(&self.model.family, &self.model.sensors, b, &self.obs, &self.theta)?;
        let xhat = consensus_combine(&self.gains[b.index()], &xbar, &self.topology)?;
        let node_errs: Vec<f64> = (0..n).map(|k| (x[0] - xhat[k]).powi(2)).collect();
        let mse = node_errs.iter().sum::<f64>() / n as f64;

        let lambda = price_step(
            self.table.lambda(),
            p.schedules.b.at(self.t as usize),
            b.active_count(),
            p.n_bar,
            p.lambda_bounds.0,
            p.lambda_bounds.1,
        );
        self.table.set_lambda(lambda);

        let mut extra_reads = 0;
        if self.t % p.period == 0 {
            extra_reads = n;
            // Error-table pull toward each configuration's network proxy,
            // under the gains as they stand this slot.
            let step = p.schedules.a.at(self.nu);
            for cfg in Configuration::all(n) {
                let y = y_kb_proxy(
                    &self.model.family,
                    &self.model.sensors,
                    cfg,
                    &self.obs,
                    &self.theta,
                    &self.gains[cfg.index()],
                    &self.topology,
                )?;
                self.table.set_f(cfg, table_step(self.table.f(cfg), step, y, 0.0, p.a0));
            }

            // One SPSA descent step on the sampled configuration's gains.
            let k_events = self.nu_b[b.index()];
            let (family, sensors, obs, theta, topology) =
                (&self.model.family, &self.model.sensors, &self.obs, &self.theta, &self.topology);
            gain_descent_step(
                &mut self.gains[b.index()],
                &self.support,
                p.schedules.b.at(k_events),
                p.schedules.d.at(k_events),
                p.a0,
                &mut self.spsa_gain_rng,
                |k| y_kb_proxy(family, sensors, b, obs, theta, k, topology),
            )?;
            self.nu_b[b.index()] += 1;

            // Parameter ascent on the full-read likelihood.
            let dim = self.theta.len();
            if dim > 0 {
                let delta = rademacher(dim, &mut self.spsa_theta_rng);
                let grad = spsa_gradient(&self.theta, p.schedules.d.at(self.nu), &delta, |theta| {
                    marginal_log_likelihood(family, sensors, Configuration::ones(n), obs, theta)
                })?;
                crate::sa::ascent_step(&mut self.theta, &grad, p.schedules.c.at(self.nu), p.theta_box);
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
            extras: node_errs,
        };
        self.t += 1;
        Ok(record)
    }
}
