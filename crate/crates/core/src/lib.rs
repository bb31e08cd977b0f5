//! Dynamic sensor-subset selection for tracking time-varying stochastic
//! processes.
//!
//! A network of `N` sensors observes a hidden process `X(t)` (an i.i.d.
//! parametric draw or a finite-state Markov chain). Activating sensor `k`
//! costs energy, so each slot only a subset `B(t) ∈ {0,1}^N` is switched on
//! and the process is estimated from the active observations. The subset is
//! sampled from the Gibbs distribution
//!
//! ```text
//! π_β(B) = exp(−β·h(B)) / Z_β,      h(B) = f(B) + λ‖B‖₁,
//! ```
//!
//! where `f(B)` is the expected squared estimation error under `B`, `λ` is an
//! activation price adapted by stochastic approximation until the mean number
//! of active sensors meets a budget `N̄`, and `β` (the inverse temperature)
//! controls how sharply the sampler concentrates on low-cost subsets. When the
//! process distribution itself is unknown, its parameter θ and the error
//! table `f` are learned on separate timescales from occasional full sensor
//! reads, with gradients estimated by simultaneous perturbation (SPSA).
//!
//! The crate provides:
//!
//! - [`model`] — process, observation, and network-topology models plus the
//!   seeded, stream-split RNG layout that makes every run reproducible;
//! - [`gibbs`] — the configuration samplers: fixed-temperature, annealed, and
//!   a fixed-cardinality (swap-move) variant;
//! - [`estimate`] — closed-form Gaussian posteriors and the error proxies fed
//!   to the learning updates;
//! - [`sa`] — step-size schedules with a validity checker and the four
//!   stochastic-approximation kernels (λ, f, θ-SPSA, consensus-gain SPSA);
//! - [`oracle`] — exhaustive small-instance ground truth: exact Gibbs
//!   distribution, exact transition kernel, brute-force optima, exact mean
//!   active count;
//! - [`tracker`] — the tracking loops: centralized (known θ, learned θ, and a
//!   low-communication variant), distributed i.i.d. with learned consensus
//!   gains, and a Kalman-consensus filter for Markov chains;
//! - [`baseline`] — reference policies (fixed greedy subset, centralized
//!   Kalman on two sensors, observation-free prediction);
//! - [`metrics`], [`scenario`], [`runner`] — CSV/JSON metric emission, TOML
//!   scenario files with built-in presets, and the seeded replication driver.

pub mod baseline;
pub mod estimate;
pub mod gibbs;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod runner;
pub mod sa;
pub mod scenario;
pub mod tracker;

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are named after the contract they enforce; most are construction
/// or precondition failures surfaced before any simulation starts.
#[derive(Debug, Error)]
pub enum Error {
    /// An energy-table lookup hit an entry that was never filled in.
    #[error("energy table has no value for configuration {0}")]
    MissingEnergy(String),
    /// An annealing schedule violates its validity bound β₀·N·Δ < 1.
    #[error("invalid annealing schedule: beta0*N*delta = {0} >= 1")]
    InvalidSchedule(f64),
    /// A fixed-cardinality chain was asked for an infeasible count.
    #[error("infeasible cardinality: want {want} active of {n} (state has {have})")]
    InfeasibleCardinality { want: usize, have: usize, n: usize },
    /// An exhaustive computation was requested above the size guard.
    #[error("instance too large for exhaustive computation: N = {0} > {1}")]
    TooLarge(usize, usize),
    /// The combined information matrix of a Gaussian posterior is singular.
    #[error("singular information matrix; posterior undefined")]
    SingularInformation,
    /// A Kalman innovation covariance could not be inverted.
    #[error("singular innovation covariance at sensor {0}")]
    SingularInnovation(usize),
    /// A gain matrix has support outside the communication topology.
    #[error("gain matrix entry ({0},{1}) is nonzero off the topology")]
    SparsityViolation(usize, usize),
    /// A step-size schedule fails one of the summability/ratio conditions.
    #[error("step-size schedule condition violated: {0}")]
    ConditionViolated(String),
    /// An objective/likelihood evaluation requested by SPSA failed.
    #[error("objective evaluation failed: {0}")]
    EvaluationFailed(String),
    /// Topology adjacency is not symmetric.
    #[error("topology is asymmetric: edge ({0},{1}) has no reverse")]
    Asymmetric(usize, usize),
    /// Topology contains a self-loop.
    #[error("topology has a self-loop at node {0}")]
    SelfLoop(usize),
    /// Topology graph is not connected.
    #[error("topology is disconnected: node {0} unreachable from node 0")]
    Disconnected(usize),
    /// A baseline was requested for an incompatible model family.
    #[error("incompatible baseline: {0}")]
    IncompatibleBaseline(String),
    /// Scenario/config-level validation failure.
    #[error("invalid scenario: {0}")]
    Config(String),
    /// Filesystem failure while emitting metrics.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
