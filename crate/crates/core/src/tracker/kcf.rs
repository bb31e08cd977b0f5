//! Distributed Markov-chain tracking: Kalman-consensus filtering plus
//! Gibbs subset selection.
//!
//! The chain lives on unit vectors `e_i`, so it is a linear system
//! `X(t+1) = A X(t) + w(t)` with state-dependent noise, and each sensor is
//! linear in the state: `z_k = H_k X + v_k` with `H_k = [m_{k,1} ⋯ m_{k,s}]`.
//! Each node runs a Kalman-style update on its belief vector with two
//! twists: a consensus term pulls toward neighbours' prior beliefs, and the
//! posterior is projected onto the probability simplex so it stays a valid
//! belief. The noise covariances are unknown (they depend on the hidden
//! state), so each node substitutes belief-weighted mixtures for them.
//!
//! Selection works exactly as in the distributed i.i.d. tracker —
//! identically-seeded per-node samplers — but the error table is learned
//! from a `T`-delayed proxy: on each learning slot the nodes broadcast
//! `Tr(M_k)`, and `T` slots later that network average updates the entry of
//! the configuration that was active when it was recorded.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha12Rng;

use crate::gibbs::{gibbs_step, EnergyTable, GibbsChainState};
use crate::model::{Configuration, MarkovModel, Topology};
use crate::rng::{obs_stream, SeedTree, STREAM_PROCESS};
use crate::sa::{price_step, table_step, StepSchedules};
use crate::tracker::{SlotRecord, Tracker};
use crate::{Error, Result};

/// Euclidean projection onto the probability simplex by sort-and-threshold:
/// the unique `x ≥ 0, Σx = 1` minimizing `‖x − v‖²` is
/// `x_i = max(v_i − τ, 0)` with `τ` chosen from the sorted prefix sums.
pub fn simplex_project(v: &DVector<f64>) -> DVector<f64> {
    let s = v.len();
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("belief entries must be finite"));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    DVector::from_fn(s, |i, _| (v[i] - tau).max(0.0))
}

/// Per-node filter state.
#[derive(Debug, Clone, PartialEq)]
pub struct KcfNodeState {
    /// Prior belief `X̄(t)` (before this slot's observation).
    pub xbar: DVector<f64>,
    /// Posterior belief `X̂(t)` (a simplex point).
    pub xhat: DVector<f64>,
    /// Prior-error covariance proxy `P_k(t)`.
    pub p: DMatrix<f64>,
    /// Posterior-error covariance proxy `M_k(t)`.
    pub m: DMatrix<f64>,
    /// Belief-weighted observation-noise proxy `R_k(t)` (zero after an
    /// inactive slot, as the update equations prescribe).
    pub r: DMatrix<f64>,
    /// Observation matrix `H_k` (one column of means per state).
    pub h: DMatrix<f64>,
    /// Per-state observation covariances `Σ_{k,i}`.
    pub sigmas: Vec<DMatrix<f64>>,
    /// Consensus gain `C_k` on neighbour disagreement.
    pub c: f64,
}

impl KcfNodeState {
    /// A node starting from the uniform belief: `P(0)` is the covariance of
    /// a uniform categorical draw and `R(0)` the uniform-weighted noise
    /// mixture.
    pub fn new(h: DMatrix<f64>, sigmas: Vec<DMatrix<f64>>, c: f64) -> Self {
        let s = h.ncols();
        let r_obs = h.nrows();
        assert_eq!(sigmas.len(), s, "one observation covariance per state");
        let uniform = DVector::from_element(s, 1.0 / s as f64);
        let p0 = DMatrix::from_fn(s, s, |i, j| {
            let diag = if i == j { 1.0 / s as f64 } else { 0.0 };
            diag - 1.0 / (s * s) as f64
        });
        let mut r0 = DMatrix::zeros(r_obs, r_obs);
        for sig in &sigmas {
            r0 += sig / s as f64;
        }
        Self {
            xbar: uniform.clone(),
            xhat: uniform,
            p: p0,
            m: DMatrix::zeros(s, s),
            r: r0,
            h,
            sigmas,
            c,
        }
    }

    /// Belief-weighted mixture `Σ_i w(i)·Σ_{k,i}`.
    fn weighted_obs_cov(&self, weights: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.r.nrows(), self.r.ncols());
        for (i, sig) in self.sigmas.iter().enumerate() {
            out += sig * weights[i];
        }
        out
    }
}

/// One slot of the Kalman-consensus filter at a single node.
///
/// `obs` is `Some` exactly when the node's sensor is active; inactive nodes
/// skip the gain computation entirely (the gain equation carries the same
/// activation factor, so the gain would be zero anyway — skipping also
/// avoids inverting the zero innovation covariance that follows an inactive
/// slot). The posterior is
///
/// ```text
/// X̂ = [X̄ + K·(z − H X̄) + C·Σ_{j∈nbr}(X̄_j − X̄)]_simplex,
/// ```
///
/// followed by the prediction `X̄ ← A X̂` and the covariance bookkeeping
/// (`R`, `Q` belief-weighted under the predicted belief, `F = I − K H`,
/// `M = F P Fᵀ + K R Kᵀ`, `P ← A M Aᵀ + Q`).
pub fn kcf_update(
    node: &mut KcfNodeState,
    sensor: usize,
    obs: Option<&DVector<f64>>,
    neighbor_priors: &[DVector<f64>],
    a: &DMatrix<f64>,
    q_per_state: &[DMatrix<f64>],
) -> Result<()> {
    let s = node.xbar.len();
    let r_obs = node.h.nrows();

    let k_gain = match obs {
        Some(_) => {
            let innovation_cov = &node.r + &node.h * &node.p * node.h.transpose();
            let inv = innovation_cov
                .try_inverse()
                .ok_or(Error::SingularInnovation(sensor))?;
            &node.p * node.h.transpose() * inv
        }
        None => DMatrix::zeros(s, r_obs),
    };

    let mut xhat = node.xbar.clone();
    if let Some(z) = obs {
        xhat += &k_gain * (z - &node.h * &node.xbar);
    }
    for prior in neighbor_priors {
        xhat += node.c * (prior - &node.xbar);
    }
    node.xhat = simplex_project(&xhat);

    let xbar_next = a * &node.xhat;
    let r_next = match obs {
        Some(_) => node.weighted_obs_cov(&xbar_next),
        None => DMatrix::zeros(r_obs, r_obs),
    };
    let mut q = DMatrix::zeros(s, s);
    for (i, qi) in q_per_state.iter().enumerate() {
        q += qi * xbar_next[i];
    }
    let f = match obs {
        Some(_) => DMatrix::identity(s, s) - &k_gain * &node.h,
        None => DMatrix::identity(s, s),
    };
    node.m = &f * &node.p * f.transpose() + &k_gain * &r_next * k_gain.transpose();
    node.p = a * &node.m * a.transpose() + q;
    node.r = r_next;
    node.xbar = xbar_next;
    Ok(())
}

/// Configuration of a [`KcfTracker`].
#[derive(Debug, Clone, PartialEq)]
pub struct KcfParams {
    /// Inverse temperature of the configuration sampler.
    pub beta: f64,
    /// Target mean number of active sensors.
    pub n_bar: f64,
    /// Learning period `T`; also the delay of the error-table proxy.
    pub period: u64,
    /// Step-size rules; only `a` (table) and `b` (price) are used here.
    pub schedules: StepSchedules,
    /// Initial activation price.
    pub lambda0: f64,
    /// Projection window for λ.
    pub lambda_bounds: (f64, f64),
    /// Clamp `A₀` for table entries.
    pub a0: f64,
    /// Sampler coordinate updates per slot.
    pub gibbs_sweeps: usize,
}

/// Distributed Markov-chain tracking loop.
pub struct KcfTracker {
    model: MarkovModel,
    topology: Topology,
    params: KcfParams,
    table: EnergyTable,
    chains: Vec<GibbsChainState>,
    nodes: Vec<KcfNodeState>,
    q_per_state: Vec<DMatrix<f64>>,
    /// True (hidden) state index.
    state: usize,
    t: u64,
    /// `(configuration index, network-average Tr M)` recorded on the last
    /// learning slot, applied one period later.
    pending: Option<(usize, f64)>,
    /// Per-configuration delayed-update counters.
    nu_b: Vec<usize>,
    process_rng: ChaCha12Rng,
    obs_rngs: Vec<ChaCha12Rng>,
    obs: Vec<DVector<f64>>,
}

impl KcfTracker {
    pub fn new(model: MarkovModel, topology: Topology, params: KcfParams, seeds: &SeedTree) -> Result<Self> {
        let n = model.num_sensors();
        let s = model.num_states();
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
        params.schedules.a.validate_robbins_monro("a")?;
        params.schedules.b.validate_robbins_monro("b")?;
        if params.schedules.b.exp <= params.schedules.a.exp {
            return Err(Error::ConditionViolated(format!(
                "price steps must decay faster than table steps: b.exp {} <= a.exp {}",
                params.schedules.b.exp, params.schedules.a.exp
            )));
        }

        let nodes = (0..n)
            .map(|k| {
                KcfNodeState::new(
                    model.obs_mean[k].clone(),
                    model.obs_cov[k].clone(),
                    topology.consensus_gain[k],
                )
            })
            .collect();
        let chains = (0..n)
            .map(|_| GibbsChainState::new(Configuration::zeros(n), seeds))
            .collect();
        let q_per_state = (0..s).map(|i| model.system_noise_cov(i)).collect();
        let obs = (0..n).map(|k| DVector::zeros(model.obs_mean[k].nrows())).collect();

        // X(0) drawn from the stationary law so time averages settle fast.
        let mut process_rng = seeds.stream(STREAM_PROCESS);
        let state = sample_categorical(&model.stationary(), &mut process_rng);

        Ok(Self {
            table: EnergyTable::constant(n, 0.0, params.lambda0),
            obs_rngs: (0..n).map(|k| seeds.stream(&obs_stream(k))).collect(),
            process_rng,
            model,
            topology,
            params,
            chains,
            nodes,
            q_per_state,
            state,
            t: 0,
            pending: None,
            nu_b: vec![0; 1 << n],
            obs,
        })
    }

    /// Current learned energy table.
    pub fn table(&self) -> &EnergyTable {
        &self.table
    }

    /// Per-node filter states.
    pub fn nodes(&self) -> &[KcfNodeState] {
        &self.nodes
    }

    /// What each node's sampler currently holds.
    pub fn node_configs(&self) -> Vec<Configuration> {
        self.chains.iter().map(|c| c.current()).collect()
    }

    /// The hidden state the simulation is currently in.
    pub fn true_state(&self) -> usize {
        self.state
    }
}

fn sample_categorical(weights: &DVector<f64>, rng: &mut impl rand::Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl Tracker for KcfTracker {
    fn theta_dim(&self) -> usize {
        0
    }

    fn extra_columns(&self) -> Vec<String> {
        let n = self.model.num_sensors();
        (0..n)
            .map(|k| format!("mse_node_{k}"))
            .chain((0..n).map(|k| format!("trm_node_{k}")))
            .chain(std::iter::once("decode_err".to_string()))
            .collect()
    }

    fn step(&mut self) -> Result<SlotRecord> {
        let n = self.model.num_sensors();
        let p = self.params.clone();

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

        // Observe the current hidden state (every sensor's stream advances
        // every slot so runs pair exactly across policies).
        for k in 0..n {
            self.obs[k] = self.model.observe(k, self.state, &mut self.obs_rngs[k]);
        }

        // Synchronous filter sweep: all nodes see this slot's priors.
        let priors: Vec<DVector<f64>> = self.nodes.iter().map(|nd| nd.xbar.clone()).collect();
        for k in 0..n {
            let neighbor_priors: Vec<DVector<f64>> = self
                .topology
                .neighbors(k)
                .iter()
                .map(|&j| priors[j].clone())
                .collect();
            let obs = b.get(k).then_some(&self.obs[k]);
            kcf_update(&mut self.nodes[k], k, obs, &neighbor_priors, &self.model.a, &self.q_per_state)?;
        }

        // Metrics against the true unit-vector state.
        let truth = DVector::from_fn(self.model.num_states(), |i, _| {
            if i == self.state { 1.0 } else { 0.0 }
        });
        let node_errs: Vec<f64> = self.nodes.iter().map(|nd| (&nd.xhat - &truth).norm_squared()).collect();
        let mse = node_errs.iter().sum::<f64>() / n as f64;
        let trms: Vec<f64> = self.nodes.iter().map(|nd| nd.m.trace()).collect();
        let decode_err = self
            .nodes
            .iter()
            .map(|nd| u8::from(nd.xhat.argmax().0 != self.state) as f64)
            .sum::<f64>()
            / n as f64;

        let lambda = price_step(
            self.table.lambda(),
            p.schedules.b.at(self.t as usize),
            b.active_count(),
            p.n_bar,
            p.lambda_bounds.0,
            p.lambda_bounds.1,
        );
        self.table.set_lambda(lambda);

        // Delayed error-table learning: apply what was recorded one period
        // ago, then record this slot's proxy for one period ahead.
        if self.t % p.period == 0 {
            if let Some((idx, trm)) = self.pending.take() {
                let cfg = Configuration::from_index(n, idx);
                let step = p.schedules.a.at(self.nu_b[idx]);
                self.table.set_f(cfg, table_step(self.table.f(cfg), step, trm, 0.0, p.a0));
                self.nu_b[idx] += 1;
            }
            let avg_trm = trms.iter().sum::<f64>() / n as f64;
            self.pending = Some((b.index(), avg_trm));
        }

        // The chain moves on.
        self.state = self.model.sample_next(self.state, &mut self.process_rng);

        let mut extras = node_errs;
        extras.extend(trms);
        extras.push(decode_err);
        let record = SlotRecord {
            t: self.t,
            mse,
            active: b.active_count(),
            lambda,
            theta: Vec::new(),
            extra_reads: 0,
            extras,
        };
        self.t += 1;
        Ok(record)
    }
}
