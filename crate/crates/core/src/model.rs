//! Process models, sensor observation models, and network topology.
//!
//! Two process families are supported:
//!
//! - an i.i.d. sequence `X(t) ~ p_θ` from a parametric Gaussian family, each
//!   sensor observing `z_k(t) = H_k X(t) + v_k(t)` with `v_k ~ N(0, R_k)`;
//! - a finite-state Markov chain whose states are the unit vectors `e_i`,
//!   with `X(t+1) = A X(t) + w(t)` for a column-stochastic `A`, each sensor
//!   observing `z_k(t) ~ N(m_{k,i}, Σ_{k,i})` when `X(t) = e_i`.
//!
//! [`Configuration`] is the activation bit-vector shared by every sampler and
//! tracker in the crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum sensor count representable by a [`Configuration`] mask.
pub const MAX_SENSORS: usize = 32;

/// An activation pattern `B ∈ {0,1}^N`: bit `k` set means sensor `k` active.
///
/// Stored as a mask so a configuration doubles as an index into dense
/// per-configuration tables (`index = mask`, tables have `2^N` entries).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    mask: u32,
}

impl Configuration {
    /// The all-zeros configuration on `n` sensors.
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_SENSORS, "at most {MAX_SENSORS} sensors supported");
        Self { n, mask: 0 }
    }

    /// The all-ones configuration on `n` sensors.
    pub fn ones(n: usize) -> Self {
        assert!(n <= MAX_SENSORS);
        let mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        Self { n, mask }
    }

    /// Rebuilds a configuration from its table index.
    pub fn from_index(n: usize, index: usize) -> Self {
        assert!(n <= MAX_SENSORS);
        assert!(index < (1usize << n), "index {index} out of range for n={n}");
        Self { n, mask: index as u32 }
    }

    /// Builds from explicit bits (length = sensor count).
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut c = Self::zeros(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            c.set(k, b);
        }
        c
    }

    /// Number of sensors `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when `N = 0`.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Whether sensor `k` is active.
    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.n);
        self.mask >> k & 1 == 1
    }

    /// Activates or deactivates sensor `k`.
    pub fn set(&mut self, k: usize, active: bool) {
        assert!(k < self.n);
        if active {
            self.mask |= 1 << k;
        } else {
            self.mask &= !(1 << k);
        }
    }

    /// A copy with sensor `k` forced to `active` (the completion `(B_{−k}, ·)`).
    pub fn with(&self, k: usize, active: bool) -> Self {
        let mut c = *self;
        c.set(k, active);
        c
    }

    /// `‖B‖₁`: the number of active sensors.
    pub fn active_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Index of this configuration into a dense `2^N` table.
    pub fn index(&self) -> usize {
        self.mask as usize
    }

    /// Iterator over the active sensor indices.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&k| self.get(k))
    }

    /// All `2^N` configurations on `n` sensors in index order.
    pub fn all(n: usize) -> impl Iterator<Item = Configuration> {
        (0..(1usize << n)).map(move |i| Configuration::from_index(n, i))
    }
}

impl std::fmt::Display for Configuration {
    /// Bits rendered sensor-0-first, e.g. `01011`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for k in 0..self.n {
            write!(f, "{}", u8::from(self.get(k)))?;
        }
        Ok(())
    }
}

/// Parametric Gaussian family for the i.i.d. process `X(t) ~ p_θ`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GaussianFamily {
    /// Scalar `X ~ N(θ, (1 − θ)²)`: one knob couples location and spread.
    ScalarCoupled,
    /// Fixed `N(mean, cov)` with no θ dependence (θ is empty).
    Fixed { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

impl GaussianFamily {
    /// Process dimension `q`.
    pub fn dim(&self) -> usize {
        match self {
            GaussianFamily::ScalarCoupled => 1,
            GaussianFamily::Fixed { mean, .. } => mean.len(),
        }
    }

    /// Parameter dimension `d`.
    pub fn theta_dim(&self) -> usize {
        match self {
            GaussianFamily::ScalarCoupled => 1,
            GaussianFamily::Fixed { .. } => 0,
        }
    }

    /// Mean of `X` under parameter `theta`.
    pub fn mean(&self, theta: &[f64]) -> DVector<f64> {
        match self {
            GaussianFamily::ScalarCoupled => DVector::from_element(1, theta[0]),
            GaussianFamily::Fixed { mean, .. } => DVector::from_column_slice(mean),
        }
    }

    /// Covariance of `X` under parameter `theta`.
    pub fn cov(&self, theta: &[f64]) -> DMatrix<f64> {
        match self {
            GaussianFamily::ScalarCoupled => {
                let s = 1.0 - theta[0];
                DMatrix::from_element(1, 1, s * s)
            }
            GaussianFamily::Fixed { mean, cov } => {
                let q = mean.len();
                DMatrix::from_fn(q, q, |i, j| cov[i][j])
            }
        }
    }
}

/// Linear-Gaussian observation model for one sensor: `z = H x + v`,
/// `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    /// Observation matrix `H` (r × q).
    pub h: DMatrix<f64>,
    /// Noise covariance `R` (r × r), symmetric positive definite.
    pub r: DMatrix<f64>,
}

impl SensorModel {
    /// A scalar sensor `z = x + v` with noise standard deviation `sd`.
    pub fn scalar(sd: f64) -> Self {
        Self {
            h: DMatrix::from_element(1, 1, 1.0),
            r: DMatrix::from_element(1, 1, sd * sd),
        }
    }

    /// One noisy reading of `state`.
    pub fn observe(&self, state: &DVector<f64>, rng: &mut impl Rng) -> DVector<f64> {
        &self.h * state + gaussian_draw(&self.r, rng)
    }
}

/// The i.i.d. process together with its sensor bank.
#[derive(Debug, Clone)]
pub struct IidModel {
    /// Parametric family of `X(t)`.
    pub family: GaussianFamily,
    /// True parameter θ₀ generating the data.
    pub theta_true: Vec<f64>,
    /// Per-sensor observation models.
    pub sensors: Vec<SensorModel>,
}

impl IidModel {
    /// Number of sensors `N`.
    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    /// Process dimension `q`.
    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// One process draw `X ~ p_{θ₀}`.
    pub fn sample_state(&self, rng: &mut impl Rng) -> DVector<f64> {
        self.family.mean(&self.theta_true) + gaussian_draw(&self.family.cov(&self.theta_true), rng)
    }
}

/// Finite-state Markov chain on unit-vector states with state-dependent
/// Gaussian observations.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    /// Column-stochastic transition matrix: `X(t+1) = A X(t)` in expectation,
    /// i.e. `A(j,i) = P(next = e_j | current = e_i)`.
    pub a: DMatrix<f64>,
    /// `obs_mean[k]` is sensor k's `H_k` (r × |X|): column `i` is `m_{k,i}`.
    pub obs_mean: Vec<DMatrix<f64>>,
    /// `obs_cov[k][i]` is `Σ_{k,i}` (r × r) for sensor k in state `e_i`.
    pub obs_cov: Vec<Vec<DMatrix<f64>>>,
}

impl MarkovModel {
    /// Builds from the row-stochastic transition matrix (`row i` = law of the
    /// next state given state i), which is how config files spell it;
    /// internally stored column-stochastic.
    pub fn from_row_stochastic(
        rows: &[Vec<f64>],
        obs_mean: Vec<DMatrix<f64>>,
        obs_cov: Vec<Vec<DMatrix<f64>>>,
    ) -> Result<Self> {
        let s = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(Error::Config(format!("transition row {i} has length {} != {s}", row.len())));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                return Err(Error::Config(format!("transition row {i} is not a distribution (sum {sum})")));
            }
        }
        let a = DMatrix::from_fn(s, s, |j, i| rows[i][j]);
        let model = Self { a, obs_mean, obs_cov };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let s = self.num_states();
        if self.obs_mean.len() != self.obs_cov.len() {
            return Err(Error::Config("obs_mean/obs_cov sensor counts differ".into()));
        }
        for (k, h) in self.obs_mean.iter().enumerate() {
            if h.ncols() != s {
                return Err(Error::Config(format!("sensor {k} mean table has {} states, expected {s}", h.ncols())));
            }
            if self.obs_cov[k].len() != s {
                return Err(Error::Config(format!("sensor {k} covariance table has {} states, expected {s}", self.obs_cov[k].len())));
            }
        }
        Ok(())
    }

    /// Number of states `|X|`.
    pub fn num_states(&self) -> usize {
        self.a.nrows()
    }

    /// Number of sensors `N`.
    pub fn num_sensors(&self) -> usize {
        self.obs_mean.len()
    }

    /// Next state index given the current one, drawn from column `i` of `A`.
    pub fn sample_next(&self, current: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for j in 0..self.num_states() {
            acc += self.a[(j, current)];
            if u < acc {
                return j;
            }
        }
        self.num_states() - 1
    }

    /// One observation from sensor `k` in state `e_i`.
    pub fn observe(&self, k: usize, state: usize, rng: &mut impl Rng) -> DVector<f64> {
        let mean = self.obs_mean[k].column(state).into_owned();
        mean + gaussian_draw(&self.obs_cov[k][state], rng)
    }

    /// Conditional system-noise covariance `Q^(i) = Cov(X(t+1) | X(t) = e_i)`
    /// `= diag(a_i) − a_i a_iᵀ` with `a_i = A e_i`.
    pub fn system_noise_cov(&self, i: usize) -> DMatrix<f64> {
        let ai = self.a.column(i).into_owned();
        DMatrix::from_diagonal(&ai) - &ai * ai.transpose()
    }

    /// Stationary distribution of the chain via power iteration on `A`.
    pub fn stationary(&self) -> DVector<f64> {
        let s = self.num_states();
        let mut pi = DVector::from_element(s, 1.0 / s as f64);
        for _ in 0..20_000 {
            let next = &self.a * &pi;
            if (&next - &pi).abs().max() < 1e-14 {
                return next;
            }
            pi = next;
        }
        pi
    }
}

/// Undirected communication graph with per-node consensus gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    /// Sorted neighbor lists.
    adj: Vec<Vec<usize>>,
    /// Per-node consensus gain `C_k` applied to neighbor disagreement.
    pub consensus_gain: Vec<f64>,
}

impl Topology {
    /// Builds from an undirected edge list; validates on construction.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], consensus_gain: Vec<f64>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Config(format!("edge ({i},{j}) out of range for {n} nodes")));
            }
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let topo = Self { n, adj, consensus_gain };
        topo.validate()?;
        Ok(topo)
    }

    /// A path `0 — 1 — ⋯ — (n−1)` with uniform consensus gain.
    pub fn line(n: usize, gain: f64) -> Self {
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::from_edges(n, &edges, vec![gain; n]).expect("line topology is always valid")
    }

    /// A single isolated node (the degenerate 1-sensor network).
    pub fn singleton(gain: f64) -> Self {
        Self::from_edges(1, &[], vec![gain]).expect("singleton topology is always valid")
    }

    /// Accepts iff the graph is symmetric, loop-free, and connected.
    pub fn validate(&self) -> Result<()> {
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if j == i {
                    return Err(Error::SelfLoop(i));
                }
                if !self.adj[j].contains(&i) {
                    return Err(Error::Asymmetric(i, j));
                }
            }
        }
        if self.consensus_gain.len() != self.n {
            return Err(Error::Config(format!(
                "expected {} consensus gains, got {}",
                self.n,
                self.consensus_gain.len()
            )));
        }
        // Connectivity by breadth-first search from node 0.
        if self.n > 0 {
            let mut seen = vec![false; self.n];
            let mut queue = vec![0usize];
            seen[0] = true;
            while let Some(i) = queue.pop() {
                for &j in &self.adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push(j);
                    }
                }
            }
            if let Some(i) = seen.iter().position(|&s| !s) {
                return Err(Error::Disconnected(i));
            }
        }
        Ok(())
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the graph has no nodes.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Neighbors of node `k`, sorted.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.adj[k]
    }

    /// Whether `(i,j)` may carry a gain entry: an edge or the diagonal.
    pub fn supports(&self, i: usize, j: usize) -> bool {
        i == j || self.adj[i].contains(&j)
    }

    /// All supported gain positions (edges in both directions plus the
    /// diagonal), row-major order.
    pub fn gain_support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.supports(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// One draw from `N(0, cov)` via the (lower) Cholesky factor.
///
/// Falls back to a zero draw for an exactly-zero covariance so degenerate
/// (noise-free) sensors are usable in tests.
pub fn gaussian_draw(cov: &DMatrix<f64>, rng: &mut impl Rng) -> DVector<f64> {
    let r = cov.nrows();
    let z = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
    match cov.clone().cholesky() {
        Some(chol) => chol.l() * z,
        None => {
            // Symmetric PSD but singular: use an eigendecomposition square root.
            let eig = cov.clone().symmetric_eigen();
            let sqrt = DMatrix::from_fn(r, r, |i, j| {
                eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt()
            });
            sqrt * z
        }
    }
}
