//! Step-size schedules and the stochastic-approximation update kernels.
//!
//! Four decreasing step sequences drive the learning iterates, each on its
//! own timescale (fastest first):
//!
//! | rule | drives                          | requirement                      |
//! |------|---------------------------------|----------------------------------|
//! | `a`  | error-table (`f`) updates       | Σa = ∞, Σa² < ∞                  |
//! | `b`  | activation-price (`λ`) updates  | Σb = ∞, Σb² < ∞, b/a → 0         |
//! | `c`  | parameter (`θ`) updates         | Σc = ∞, Σc² < ∞, c/b → 0         |
//! | `d`  | SPSA probe size                 | d → 0, Σc²/d² < ∞                |
//!
//! The timescale ratios make each iterate see the faster ones as
//! equilibriated and the slower ones as frozen. All rules here are power
//! laws `coeff/(k+1)^exp`, for which every condition reduces to exponent
//! arithmetic checked once at construction by [`StepSchedules::validate`];
//! a sequence that fails is rejected with the violated condition spelled
//! out rather than silently converging to the wrong point (or not at all).
//!
//! The kernels themselves are three one-liners with projection — a clamped
//! price ascent, a clamped pull toward a sampled objective value, and a
//! two-point simultaneous-perturbation (SPSA) gradient probe used for both
//! the parameter ascent and the consensus-gain descent.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Power-law step rule `coeff / (k+1)^exp`.
///
/// `at(k)` is indexed by the number of *prior* events of the same kind, so
/// the first update of an iterate uses the full `coeff`. Counters, not wall
/// time, feed this: updates that fire every `T` slots pass the number of
/// earlier firings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    /// Numerator of the power law.
    pub coeff: f64,
    /// Decay exponent.
    pub exp: f64,
}

impl StepRule {
    /// Step size for an update preceded by `k` earlier updates.
    pub fn at(&self, k: usize) -> f64 {
        self.coeff / ((k + 1) as f64).powf(self.exp)
    }

    fn check_finite(&self, name: &str) -> Result<()> {
        if !(self.coeff > 0.0) || !self.coeff.is_finite() || !self.exp.is_finite() {
            return Err(Error::ConditionViolated(format!(
                "step rule `{name}` needs a positive finite coefficient and finite exponent, \
                 got {}/(k+1)^{}",
                self.coeff, self.exp
            )));
        }
        Ok(())
    }

    /// Robbins–Monro admissibility for a power law: `Σ steps = ∞` needs
    /// `exp ≤ 1`, `Σ steps² < ∞` needs `exp > 1/2`.
    pub fn validate_robbins_monro(&self, name: &str) -> Result<()> {
        self.check_finite(name)?;
        if self.exp > 1.0 {
            return Err(Error::ConditionViolated(format!(
                "step rule `{name}` must sum to infinity: exponent {} > 1",
                self.exp
            )));
        }
        if self.exp <= 0.5 {
            return Err(Error::ConditionViolated(format!(
                "step rule `{name}` must be square-summable: exponent {} <= 1/2",
                self.exp
            )));
        }
        Ok(())
    }
}

/// The four step rules used by the learning trackers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedules {
    /// Error-table update steps (fastest learning timescale).
    pub a: StepRule,
    /// Activation-price update steps.
    pub b: StepRule,
    /// Parameter update steps (slowest timescale).
    pub c: StepRule,
    /// SPSA probe size (not a gain; must only vanish slowly enough).
    pub d: StepRule,
}

impl StepSchedules {
    /// Checks every admissibility condition, spelled out per rule:
    ///
    /// - `a`, `b`, `c` are Robbins–Monro (`1/2 < exp ≤ 1`);
    /// - the probe `d` vanishes (`exp > 0`);
    /// - `Σ c²/d² < ∞`, i.e. `2(c.exp − d.exp) > 1`, so the parameter
    ///   gradient noise is summable;
    /// - timescales are ordered: `b/a → 0` and `c/b → 0` (strictly larger
    ///   exponents along the chain);
    /// - with `distributed` set, additionally `Σ b²/d² < ∞`
    ///   (`2(b.exp − d.exp) > 1`), because the consensus-gain descent runs
    ///   on the `b` timescale against the same probe.
    pub fn validate(&self, distributed: bool) -> Result<()> {
        self.a.validate_robbins_monro("a")?;
        self.b.validate_robbins_monro("b")?;
        self.c.validate_robbins_monro("c")?;
        self.d.check_finite("d")?;
        if self.d.exp <= 0.0 {
            return Err(Error::ConditionViolated(format!(
                "probe size `d` must vanish: exponent {} <= 0",
                self.d.exp
            )));
        }
        if 2.0 * (self.c.exp - self.d.exp) <= 1.0 {
            return Err(Error::ConditionViolated(format!(
                "sum of (c/d)^2 must be finite: need 2*(c.exp - d.exp) > 1, got 2*({} - {}) = {}",
                self.c.exp,
                self.d.exp,
                2.0 * (self.c.exp - self.d.exp)
            )));
        }
        if self.b.exp <= self.a.exp {
            return Err(Error::ConditionViolated(format!(
                "price steps must decay faster than table steps: b.exp {} <= a.exp {}",
                self.b.exp, self.a.exp
            )));
        }
        if self.c.exp <= self.b.exp {
            return Err(Error::ConditionViolated(format!(
                "parameter steps must decay faster than price steps: c.exp {} <= b.exp {}",
                self.c.exp, self.b.exp
            )));
        }
        if distributed && 2.0 * (self.b.exp - self.d.exp) <= 1.0 {
            return Err(Error::ConditionViolated(format!(
                "sum of (b/d)^2 must be finite for the gain descent: \
                 need 2*(b.exp - d.exp) > 1, got 2*({} - {}) = {}",
                self.b.exp,
                self.d.exp,
                2.0 * (self.b.exp - self.d.exp)
            )));
        }
        Ok(())
    }
}

/// Clamped price ascent: `λ ← [λ + step·(count − n̄)]_lo^hi`.
///
/// Prices rise while more sensors than budgeted are active and fall
/// otherwise; the projection window must contain the equilibrium price.
pub fn price_step(lambda: f64, step: f64, active_count: usize, n_bar: f64, lo: f64, hi: f64) -> f64 {
    (lambda + step * (active_count as f64 - n_bar)).clamp(lo, hi)
}

/// Clamped pull of a running table entry toward a sampled objective value:
/// `f ← [f + step·(y − f)]_lo^hi`.
pub fn table_step(f: f64, step: f64, y: f64, lo: f64, hi: f64) -> f64 {
    (f + step * (y - f)).clamp(lo, hi)
}

/// A ±1 (Rademacher) perturbation direction.
pub fn rademacher(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Two-point simultaneous-perturbation gradient estimate of `eval` at `x`:
///
/// ```text
/// ĝ_k = (eval(x + d·Δ) − eval(x − d·Δ)) / (2 d Δ_k),
/// ```
///
/// two evaluations regardless of dimension. Unbiased for quadratics in
/// expectation over Δ; the caller supplies Δ (see [`rademacher`]) so that
/// perturbation randomness stays on its dedicated stream.
pub fn spsa_gradient(
    x: &[f64],
    probe: f64,
    delta: &[f64],
    mut eval: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    assert_eq!(x.len(), delta.len());
    assert!(probe > 0.0, "probe size must be positive");
    let plus: Vec<f64> = x.iter().zip(delta).map(|(v, s)| v + probe * s).collect();
    let minus: Vec<f64> = x.iter().zip(delta).map(|(v, s)| v - probe * s).collect();
    let diff = eval(&plus)? - eval(&minus)?;
    Ok(delta.iter().map(|s| diff / (2.0 * probe * s)).collect())
}

/// Projected gradient ascent `x ← [x + step·g]_lo^hi`, componentwise on the
/// box `bounds`.
pub fn ascent_step(x: &mut [f64], grad: &[f64], step: f64, bounds: (f64, f64)) {
    for (v, g) in x.iter_mut().zip(grad) {
        *v = (*v + step * g).clamp(bounds.0, bounds.1);
    }
}

/// A Rademacher matrix carried on `support` (exactly zero elsewhere), for
/// perturbing gain matrices without leaving the communication graph.
pub fn rademacher_matrix(n: usize, support: &[(usize, usize)], rng: &mut impl Rng) -> DMatrix<f64> {
    let mut gamma = DMatrix::zeros(n, n);
    for &(i, j) in support {
        gamma[(i, j)] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }
    gamma
}

/// One projected SPSA descent step on a gain matrix over its support:
///
/// ```text
/// K(i,j) ← [K(i,j) − step·(Y(K + d·Γ) − Y(K − d·Γ)) / (2 d Γ(i,j))]_−bound^bound
/// ```
///
/// for every supported `(i,j)`, with a fresh Γ from [`rademacher_matrix`].
/// Off-support entries are untouched (they stay exactly zero), so the
/// sparsity contract survives any number of updates.
pub fn gain_descent_step(
    k: &mut DMatrix<f64>,
    support: &[(usize, usize)],
    step: f64,
    probe: f64,
    bound: f64,
    rng: &mut impl Rng,
    mut eval: impl FnMut(&DMatrix<f64>) -> Result<f64>,
) -> Result<()> {
    assert!(probe > 0.0, "probe size must be positive");
    let gamma = rademacher_matrix(k.nrows(), support, rng);
    let y_plus = eval(&(&*k + probe * &gamma))?;
    let y_minus = eval(&(&*k - probe * &gamma))?;
    for &(i, j) in support {
        let g = (y_plus - y_minus) / (2.0 * probe * gamma[(i, j)]);
        k[(i, j)] = (k[(i, j)] - step * g).clamp(-bound, bound);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    /// The reference schedule set used by the built-in scenario presets.
    fn reference() -> StepSchedules {
        StepSchedules {
            a: StepRule { coeff: 1.0, exp: 0.6 },
            b: StepRule { coeff: 2.0, exp: 0.8 },
            c: StepRule { coeff: 1.0, exp: 1.0 },
            d: StepRule { coeff: 0.2, exp: 0.1 },
        }
    }

    #[test]
    fn step_rule_counts_prior_events() {
        let r = StepRule { coeff: 2.0, exp: 0.8 };
        assert_eq!(r.at(0), 2.0);
        assert!((r.at(1) - 2.0 / 2f64.powf(0.8)).abs() < 1e-15);
        assert!((r.at(9) - 2.0 / 10f64.powf(0.8)).abs() < 1e-15);
    }

    #[test]
    fn reference_schedules_are_admissible() {
        reference().validate(false).unwrap();
        reference().validate(true).unwrap();
    }

    #[test]
    fn each_condition_is_enforced() {
        let mut s = reference();
        s.a.exp = 0.5; // not square-summable
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));

        let mut s = reference();
        s.b.exp = 1.1; // not divergent
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));

        let mut s = reference();
        s.d.exp = 0.0; // probe does not vanish
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));

        let mut s = reference();
        s.d.exp = 0.6; // sum (c/d)^2 diverges: 2*(1.0 - 0.6) = 0.8
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));

        let mut s = reference();
        s.b.exp = 0.6; // same timescale as `a`
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));

        let mut s = reference();
        s.c = StepRule { coeff: 1.0, exp: 0.8 }; // same timescale as `b`
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));

        let mut s = reference();
        s.a = StepRule { coeff: -1.0, exp: 0.6 };
        assert!(matches!(s.validate(false), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn distributed_needs_the_extra_probe_condition() {
        // 2*(b.exp - d.exp) = 2*(0.8 - 0.35) = 0.9 <= 1: only the
        // distributed variant rejects this set.
        let mut s = reference();
        s.d.exp = 0.35;
        s.validate(false).unwrap();
        assert!(matches!(s.validate(true), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn price_step_direction_and_projection() {
        // Over budget: price rises; under budget: price falls.
        assert!(price_step(1.0, 0.1, 4, 2.0, 0.0, 5.0) > 1.0);
        assert!(price_step(1.0, 0.1, 1, 2.0, 0.0, 5.0) < 1.0);
        assert_eq!(price_step(4.99, 1.0, 4, 2.0, 0.0, 5.0), 5.0);
        assert_eq!(price_step(0.01, 1.0, 0, 2.0, 0.0, 5.0), 0.0);
    }

    #[test]
    fn table_step_pulls_toward_target() {
        assert!((table_step(1.0, 0.25, 2.0, 0.0, 10.0) - 1.25).abs() < 1e-15);
        // A full step lands exactly on the target.
        assert_eq!(table_step(1.0, 1.0, 2.0, 0.0, 10.0), 2.0);
        assert_eq!(table_step(9.9, 1.0, 20.0, 0.0, 10.0), 10.0);
    }

    #[test]
    fn one_dimensional_probe_is_the_central_difference() {
        // For a quadratic, the two-point estimate is the exact derivative.
        let f = |x: &[f64]| Ok(3.0 * x[0] * x[0] - 2.0 * x[0] + 1.0);
        for delta in [1.0, -1.0] {
            let g = spsa_gradient(&[2.0], 0.1, &[delta], f).unwrap();
            assert!((g[0] - 10.0).abs() < 1e-12, "g = {:?}", g);
        }
    }

    #[test]
    fn probe_average_recovers_the_gradient_of_a_quadratic() {
        // ĝ is biased per draw but exact for quadratics when averaged over
        // all sign patterns: cross terms see E[Δ_j/Δ_k] = 0.
        let f = |x: &[f64]| Ok(x[0] * x[0] + 4.0 * x[1] * x[1] + x[0] * x[1]);
        let x = [1.0, -0.5];
        let exact = [2.0 * x[0] + x[1], 8.0 * x[1] + x[0]];
        let mut avg = [0.0, 0.0];
        for bits in 0..4u32 {
            let delta: Vec<f64> = (0..2).map(|k| if bits >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let g = spsa_gradient(&x, 0.05, &delta, f).unwrap();
            avg[0] += g[0] / 4.0;
            avg[1] += g[1] / 4.0;
        }
        assert!((avg[0] - exact[0]).abs() < 1e-12, "avg = {avg:?}");
        assert!((avg[1] - exact[1]).abs() < 1e-12, "avg = {avg:?}");
    }

    #[test]
    fn ascent_respects_the_box() {
        let mut x = [0.75, 0.1];
        ascent_step(&mut x, &[10.0, -10.0], 0.1, (0.0, 0.8));
        assert_eq!(x, [0.8, 0.0]);
    }

    #[test]
    fn rademacher_matrix_respects_support() {
        let mut rng = SeedTree::new(5).stream("spsa-gain");
        let support = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let g = rademacher_matrix(3, &support, &mut rng);
        for i in 0..3 {
            for j in 0..3 {
                if support.contains(&(i, j)) {
                    assert!(g[(i, j)] == 1.0 || g[(i, j)] == -1.0);
                } else {
                    assert_eq!(g[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn scalar_gain_descent_finds_the_minimum() {
        // Y(K) = (K - 0.3)^2 on a singleton support with decreasing steps.
        let mut rng = SeedTree::new(12).stream("spsa-gain");
        let mut k = DMatrix::from_element(1, 1, 1.0);
        let b = StepRule { coeff: 0.5, exp: 0.8 };
        let d = StepRule { coeff: 0.2, exp: 0.1 };
        for iter in 0..4000 {
            gain_descent_step(
                &mut k,
                &[(0, 0)],
                b.at(iter),
                d.at(iter),
                2.5,
                &mut rng,
                |m| Ok((m[(0, 0)] - 0.3).powi(2)),
            )
            .unwrap();
        }
        assert!((k[(0, 0)] - 0.3).abs() < 1e-3, "K = {}", k[(0, 0)]);
    }

    #[test]
    fn price_recursion_converges_to_its_root() {
        // Mean-field count 3 − λ with additive noise and budget 2: the
        // recursion is a Robbins–Monro root-finder with root λ* = 1.
        let mut rng = SeedTree::new(21).stream("gibbs");
        let rule = StepRule { coeff: 1.0, exp: 0.6 };
        let mut lambda = 0.0f64;
        for t in 0..200_000 {
            let noisy = 3.0 - lambda + rng.gen_range(-1.0..1.0);
            let count = noisy.round().max(0.0) as usize;
            lambda = price_step(lambda, rule.at(t), count, 2.0, 0.0, 5.0);
        }
        assert!((lambda - 1.0).abs() < 0.05, "lambda = {lambda}");
    }
}
