//! Exhaustive small-instance ground truth.
//!
//! Everything the samplers and trackers are supposed to approach can be
//! computed exactly when `2^N` is small: the Gibbs distribution `π_β`
//! itself, the one-step transition kernel of the random-scan sampler, the
//! true optimizer sets, and the mean active-sensor count
//! `g(λ) = E_{π_β}‖B‖₁`. The integration tests freeze these as reference
//! values; the CLI exposes them for inspection. Memory is the only limit,
//! so each entry point carries an explicit size guard rather than an
//! open-ended allocation.

use nalgebra::DMatrix;

use crate::gibbs::{conditional_activation_probability, EnergyTable};
use crate::model::Configuration;
use crate::{Error, Result};

/// Size guard for `2^N`-vector computations (8 MiB of probabilities).
pub const MAX_EXACT_SENSORS: usize = 20;
/// Size guard for `2^N × 2^N` kernel construction (128 MiB of entries).
pub const MAX_KERNEL_SENSORS: usize = 12;

/// The exact Gibbs distribution `π_β(B) = e^{−β h(B)} / Z_β` over all `2^N`
/// configurations, stored by configuration index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    /// `π_β(B)` indexed by [`Configuration::index`].
    pub probs: Vec<f64>,
    /// Inverse temperature the table was evaluated at.
    pub beta: f64,
    /// Activation price baked into `h` when the table was evaluated.
    pub lambda: f64,
}

impl ExactDistribution {
    /// Probability of one configuration.
    pub fn prob(&self, b: Configuration) -> f64 {
        self.probs[b.index()]
    }

    /// Number of sensors `N`.
    pub fn num_sensors(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    /// `E_{π_β}‖B‖₁`.
    pub fn mean_active(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * (i as u32).count_ones() as f64)
            .sum()
    }
}

fn guard(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::TooLarge(n, max));
    }
    Ok(())
}

/// Computes `π_β` exactly by normalizing `e^{−β h(B)}` over all
/// configurations, with max-subtraction so that large `β·h` cannot
/// overflow: probabilities are exact softmax values even at `β = 150`.
pub fn exact_gibbs_distribution(table: &EnergyTable, beta: f64) -> Result<ExactDistribution> {
    let n = table.num_sensors();
    guard(n, MAX_EXACT_SENSORS)?;
    let mut logits = Vec::with_capacity(1 << n);
    let mut best = f64::NEG_INFINITY;
    for b in Configuration::all(n) {
        let l = -beta * table.h(b)?;
        best = best.max(l);
        logits.push(l);
    }
    let mut z = 0.0;
    for l in &mut logits {
        *l = (*l - best).exp();
        z += *l;
    }
    for l in &mut logits {
        *l /= z;
    }
    Ok(ExactDistribution { probs: logits, beta, lambda: table.lambda() })
}

/// Exact argmin set of the priced energy `h(B) = f(B) + λ‖B‖₁`, with the
/// attained minimum. Ties are all returned.
pub fn brute_force_lagrangian(table: &EnergyTable) -> Result<(Vec<Configuration>, f64)> {
    let n = table.num_sensors();
    guard(n, MAX_EXACT_SENSORS)?;
    argmin_set(n, |b| table.h(b))
}

/// Exact argmin set of the raw error `f(B)` over the budget-feasible set
/// `‖B‖₁ ≤ n_bar` (the activation price is ignored), with the attained
/// minimum.
pub fn brute_force_constrained(table: &EnergyTable, n_bar: usize) -> Result<(Vec<Configuration>, f64)> {
    let n = table.num_sensors();
    guard(n, MAX_EXACT_SENSORS)?;
    argmin_set(n, |b| {
        if b.active_count() > n_bar {
            return Ok(f64::INFINITY);
        }
        let f = table.f(b);
        if f.is_nan() {
            return Err(Error::MissingEnergy(b.to_string()));
        }
        Ok(f)
    })
}

fn argmin_set(n: usize, mut value: impl FnMut(Configuration) -> Result<f64>) -> Result<(Vec<Configuration>, f64)> {
    let mut best = f64::INFINITY;
    let mut set = Vec::new();
    for b in Configuration::all(n) {
        let v = value(b)?;
        if v < best {
            best = v;
            set.clear();
            set.push(b);
        } else if v == best {
            set.push(b);
        }
    }
    Ok((set, best))
}

/// The exact one-step kernel of the random-scan sampler: from `B`, a
/// coordinate `j` is chosen uniformly and resampled from its conditional, so
///
/// ```text
/// P(B, B ⊕ j) = (1/N) · P(flip j | B),
/// ```
///
/// and the diagonal absorbs all stay-put mass (`1 −` off-diagonal row sum),
/// which keeps every row summing to 1 exactly.
///
/// Rows are "from", columns "to": a distribution row-vector `p` evolves as
/// `p ← p P`.
pub fn build_transition_kernel(table: &EnergyTable, beta: f64) -> Result<DMatrix<f64>> {
    let n = table.num_sensors();
    guard(n, MAX_KERNEL_SENSORS)?;
    let size = 1usize << n;
    let mut p = DMatrix::zeros(size, size);
    for b in Configuration::all(n) {
        let row = b.index();
        let mut off = 0.0;
        for j in 0..n {
            let p_on = conditional_activation_probability(table, b, j, beta)?;
            let flipped = b.with(j, !b.get(j));
            let move_prob = if b.get(j) { 1.0 - p_on } else { p_on } / n as f64;
            p[(row, flipped.index())] = move_prob;
            off += move_prob;
        }
        p[(row, row)] = 1.0 - off;
    }
    Ok(p)
}

/// `g(λ) = E_{π_β}‖B‖₁` for the table's current price.
pub fn exact_mean_active(table: &EnergyTable, beta: f64) -> Result<f64> {
    Ok(exact_gibbs_distribution(table, beta)?.mean_active())
}

/// Total-variation distance `½ Σ_B |p(B) − q(B)|` between two distributions
/// on the same configuration space.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share a support");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Per-sweep contraction factor of the random-scan chain,
/// `1 − e^{−βNΔ} / N^N`: after `l` sweeps of `N` steps each, the
/// total-variation distance to `π_β` shrinks at least geometrically with
/// this rate (`Δ` is the energy spread).
pub fn contraction_factor(beta: f64, n: usize, delta: f64) -> f64 {
    1.0 - (-beta * n as f64 * delta).exp() / (n as f64).powi(n as i32)
}
