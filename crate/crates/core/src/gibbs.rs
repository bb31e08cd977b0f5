//! Gibbs samplers over sensor configurations.
//!
//! The target law is `π_β(B) ∝ exp(−β·h(B))` with `h(B) = f(B) + λ‖B‖₁`.
//! One kernel step picks a uniformly random coordinate `j` and resamples bit
//! `j` from its conditional: activate with probability
//!
//! ```text
//! p = e^{−β h(B_{−j},1)} / (e^{−β h(B_{−j},1)} + e^{−β h(B_{−j},0)})
//!   = sigmoid(−β (h₁ − h₀)).
//! ```
//!
//! All arithmetic stays in log-energy space — at β = 150 the raw exponentials
//! under- and overflow, the sigmoid form never does. Three kernels share this
//! conditional: a fixed-β chain, a logarithmically annealed chain
//! (`β(t) = β₀ ln(1+t)`, valid only while `β₀·N·Δ < 1` for the energy spread
//! `Δ = max |h(B) − h(A)|`), and a fixed-cardinality chain that moves by
//! swapping one active sensor with one inactive sensor so it never leaves the
//! `‖B‖₁ = N̄` slice.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::model::Configuration;
use crate::rng::{SeedTree, STREAM_GIBBS};
use crate::{Error, Result};

/// Dense per-configuration cost table: `f` values plus the activation price λ.
///
/// The combined energy `h(B) = f(B) + λ‖B‖₁` is derived on lookup, so the
/// `f`/`h` relationship can never drift out of sync. Entries may be `NaN` to
/// mean "not yet filled in"; looking one up is a [`Error::MissingEnergy`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    n: usize,
    f: Vec<f64>,
    lambda: f64,
}

impl EnergyTable {
    /// Builds from a complete `2^n`-entry `f` table (index = configuration
    /// mask). `NaN` entries are allowed and mean "unknown".
    pub fn new(n: usize, f: Vec<f64>, lambda: f64) -> Self {
        assert_eq!(f.len(), 1 << n, "f table must have 2^n entries");
        Self { n, f, lambda }
    }

    /// A table with every `f(B)` set to the same value.
    pub fn constant(n: usize, f0: f64, lambda: f64) -> Self {
        Self::new(n, vec![f0; 1 << n], lambda)
    }

    /// Number of sensors `N`.
    pub fn num_sensors(&self) -> usize {
        self.n
    }

    /// The `f` value stored for `b`.
    pub fn f(&self, b: Configuration) -> f64 {
        self.f[b.index()]
    }

    /// Overwrites `f(b)`.
    pub fn set_f(&mut self, b: Configuration, value: f64) {
        self.f[b.index()] = value;
    }

    /// Raw `f` table in index order.
    pub fn f_table(&self) -> &[f64] {
        &self.f
    }

    /// Current activation price λ.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Replaces λ.
    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    /// Combined energy `h(B) = f(B) + λ‖B‖₁`.
    pub fn h(&self, b: Configuration) -> Result<f64> {
        let f = self.f[b.index()];
        if f.is_nan() {
            return Err(Error::MissingEnergy(b.to_string()));
        }
        Ok(f + self.lambda * b.active_count() as f64)
    }

    /// Energy spread `Δ = max h − min h` over all configurations.
    ///
    /// Errors if any entry is unknown.
    pub fn energy_spread(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in Configuration::all(self.n) {
            let h = self.h(b)?;
            lo = lo.min(h);
            hi = hi.max(h);
        }
        Ok(hi - lo)
    }
}

/// Inverse-temperature schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaSchedule {
    /// Constant β.
    Fixed { beta: f64 },
    /// `β(t) = β₀ ln(1 + t)`, climbing to ∞.
    Logarithmic { beta0: f64 },
}

impl BetaSchedule {
    /// A constant-β schedule.
    pub fn fixed(beta: f64) -> Self {
        BetaSchedule::Fixed { beta }
    }

    /// A logarithmic schedule, validated against the convergence condition
    /// `β₀·n·delta < 1` (`delta` bounds the energy spread).
    pub fn logarithmic(beta0: f64, n: usize, delta: f64) -> Result<Self> {
        let product = beta0 * n as f64 * delta;
        if product >= 1.0 {
            return Err(Error::InvalidSchedule(product));
        }
        Ok(BetaSchedule::Logarithmic { beta0 })
    }

    /// β at (possibly fractional) time `t ≥ 0`.
    pub fn at(&self, t: f64) -> f64 {
        match self {
            BetaSchedule::Fixed { beta } => *beta,
            BetaSchedule::Logarithmic { beta0 } => beta0 * (1.0 + t).ln(),
        }
    }
}

/// The sampler's mutable state: current configuration, step counter, and its
/// own RNG stream.
///
/// The chain owns its stream so that clones advance identically — the
/// shared-seed property the distributed trackers rely on.
#[derive(Debug, Clone)]
pub struct GibbsChainState {
    current: Configuration,
    steps: u64,
    rng: ChaCha12Rng,
}

impl GibbsChainState {
    /// A chain starting at `initial`, drawing from `seeds`' Gibbs stream.
    pub fn new(initial: Configuration, seeds: &SeedTree) -> Self {
        Self {
            current: initial,
            steps: 0,
            rng: seeds.stream(STREAM_GIBBS),
        }
    }

    /// Current configuration.
    pub fn current(&self) -> Configuration {
        self.current
    }

    /// Kernel invocations so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Conditional probability that coordinate `j` resamples to "active", given
/// the rest of `b`.
///
/// Computed as `sigmoid(−β (h₁ − h₀))`; exact at `β = 0` (½) and saturating
/// smoothly for large β instead of overflowing.
pub fn conditional_activation_probability(
    table: &EnergyTable,
    b: Configuration,
    j: usize,
    beta: f64,
) -> Result<f64> {
    let h1 = table.h(b.with(j, true))?;
    let h0 = table.h(b.with(j, false))?;
    Ok(sigmoid(-beta * (h1 - h0)))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One single-coordinate Gibbs step at inverse temperature `beta`.
///
/// Picks `j` uniformly, resamples bit `j` from its conditional, copies the
/// rest. Returns the new configuration (also stored in the chain).
pub fn gibbs_step(chain: &mut GibbsChainState, table: &EnergyTable, beta: f64) -> Result<Configuration> {
    let n = chain.current.len();
    let j = chain.rng.gen_range(0..n);
    let p = conditional_activation_probability(table, chain.current, j, beta)?;
    let u: f64 = chain.rng.gen();
    chain.current.set(j, u < p);
    chain.steps += 1;
    Ok(chain.current)
}

/// One step of the fixed-cardinality chain: proposes swapping a uniformly
/// chosen active sensor with a uniformly chosen inactive one and accepts the
/// swap with its two-point Gibbs conditional, so `‖B‖₁` never changes.
///
/// The proposal is symmetric across the cardinality slice (every state has
/// the same `n_active · n_inactive` swap pairs), which gives detailed balance
/// with respect to `π_β` restricted to the slice.
pub fn hard_constraint_step(
    chain: &mut GibbsChainState,
    table: &EnergyTable,
    beta: f64,
    n_bar: usize,
) -> Result<Configuration> {
    let n = chain.current.len();
    let have = chain.current.active_count();
    if n_bar > n || have != n_bar {
        return Err(Error::InfeasibleCardinality { want: n_bar, have, n });
    }
    chain.steps += 1;
    if n_bar == 0 || n_bar == n {
        // The slice has a single state; the chain is frozen.
        return Ok(chain.current);
    }
    let active: Vec<usize> = chain.current.active().collect();
    let inactive: Vec<usize> = (0..n).filter(|&k| !chain.current.get(k)).collect();
    let a = active[chain.rng.gen_range(0..active.len())];
    let i = inactive[chain.rng.gen_range(0..inactive.len())];
    let swapped = chain.current.with(a, false).with(i, true);
    let h_stay = table.h(chain.current)?;
    let h_swap = table.h(swapped)?;
    let p_swap = sigmoid(-beta * (h_swap - h_stay));
    let u: f64 = chain.rng.gen();
    if u < p_swap {
        chain.current = swapped;
    }
    Ok(chain.current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_n1() -> EnergyTable {
        // f(0) = 1, f(1) = 0, λ = 0.
        EnergyTable::new(1, vec![1.0, 0.0], 0.0)
    }

    #[test]
    fn equal_energies_give_half() {
        let table = EnergyTable::constant(3, 0.4, 0.0);
        let b = Configuration::zeros(3);
        let p = conditional_activation_probability(&table, b, 1, 7.0).unwrap();
        assert!((p - 0.5).abs() < 1e-15, "p = {p}");
    }

    #[test]
    fn zero_beta_gives_half() {
        let table = EnergyTable::new(2, vec![0.0, 5.0, -3.0, 9.0], 1.3);
        for b in Configuration::all(2) {
            for j in 0..2 {
                let p = conditional_activation_probability(&table, b, j, 0.0).unwrap();
                assert!((p - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn log3_gap_gives_three_quarters() {
        // β(h₀ − h₁) = ln 3  ⇒  p = 3/4 from the two-term softmax.
        let table = table_n1();
        let p = conditional_activation_probability(&table, Configuration::zeros(1), 0, 3f64.ln()).unwrap();
        assert!((p - 0.75).abs() < 1e-12, "p = {p}");
    }

    #[test]
    fn extreme_beta_is_finite_and_saturated() {
        let table = table_n1();
        let p = conditional_activation_probability(&table, Configuration::zeros(1), 0, 150.0).unwrap();
        assert!(p > 1.0 - 1e-12 && p.is_finite());
        let mut flipped = table_n1();
        flipped.set_f(Configuration::zeros(1), 0.0);
        flipped.set_f(Configuration::ones(1), 1.0);
        let q = conditional_activation_probability(&flipped, Configuration::zeros(1), 0, 150.0).unwrap();
        assert!(q < 1e-12 && q >= 0.0);
    }

    #[test]
    fn missing_energy_is_reported() {
        let table = EnergyTable::new(1, vec![f64::NAN, 0.0], 0.0);
        let err = conditional_activation_probability(&table, Configuration::zeros(1), 0, 1.0);
        assert!(matches!(err, Err(Error::MissingEnergy(_))));
    }

    #[test]
    fn log_schedule_values() {
        let sched = BetaSchedule::logarithmic(0.5, 1, 0.1).unwrap();
        assert_eq!(sched.at(0.0), 0.0);
        let t = std::f64::consts::E.powi(2) - 1.0;
        assert!((sched.at(t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_schedule_rejects_invalid_bound() {
        // β₀·N·Δ = 1.2 ≥ 1.
        let err = BetaSchedule::logarithmic(0.3, 4, 1.0);
        assert!(matches!(err, Err(Error::InvalidSchedule(p)) if (p - 1.2).abs() < 1e-12));
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let table = EnergyTable::new(3, (0..8).map(|i| (i as f64 * 0.37).sin()).collect(), 0.2);
        let seeds = SeedTree::new(99);
        let mut a = GibbsChainState::new(Configuration::zeros(3), &seeds);
        let mut b = GibbsChainState::new(Configuration::zeros(3), &seeds);
        for _ in 0..5_000 {
            let x = gibbs_step(&mut a, &table, 2.0).unwrap();
            let y = gibbs_step(&mut b, &table, 2.0).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn two_state_chain_matches_stationary_frequency() {
        // N = 1, β = ln 3, f(0)=1, f(1)=0: π(1) = 3/4; the chain resamples the
        // single coordinate independently each step.
        let table = table_n1();
        let seeds = SeedTree::new(4);
        let mut chain = GibbsChainState::new(Configuration::zeros(1), &seeds);
        let steps = 100_000;
        let mut ones = 0u64;
        for _ in 0..steps {
            if gibbs_step(&mut chain, &table, 3f64.ln()).unwrap().get(0) {
                ones += 1;
            }
        }
        let freq = ones as f64 / steps as f64;
        assert!((freq - 0.75).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn hard_constraint_keeps_cardinality() {
        let f: Vec<f64> = (0..32).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let table = EnergyTable::new(5, f, 0.3);
        let seeds = SeedTree::new(11);
        let mut init = Configuration::zeros(5);
        init.set(0, true);
        init.set(3, true);
        let mut chain = GibbsChainState::new(init, &seeds);
        for _ in 0..10_000 {
            let b = hard_constraint_step(&mut chain, &table, 5.0, 2).unwrap();
            assert_eq!(b.active_count(), 2);
        }
    }

    #[test]
    fn hard_constraint_frozen_at_full_activation() {
        let table = EnergyTable::constant(3, 0.0, 0.1);
        let seeds = SeedTree::new(1);
        let mut chain = GibbsChainState::new(Configuration::ones(3), &seeds);
        for _ in 0..100 {
            assert_eq!(hard_constraint_step(&mut chain, &table, 1.0, 3).unwrap(), Configuration::ones(3));
        }
    }

    #[test]
    fn hard_constraint_rejects_off_slice_state() {
        let table = EnergyTable::constant(3, 0.0, 0.1);
        let seeds = SeedTree::new(1);
        let mut chain = GibbsChainState::new(Configuration::zeros(3), &seeds);
        let err = hard_constraint_step(&mut chain, &table, 1.0, 2);
        assert!(matches!(err, Err(Error::InfeasibleCardinality { want: 2, have: 0, n: 3 })));
        let err = hard_constraint_step(&mut chain, &table, 1.0, 4);
        assert!(matches!(err, Err(Error::InfeasibleCardinality { want: 4, .. })));
    }
}
