//! Closed-form Gaussian estimation and the error proxies fed to learning.
//!
//! Everything here is the linear-Gaussian conjugate update in information
//! form: with prior `X ~ N(μ₀, Σ₀)` and active observations
//! `z_k = H_k X + v_k`, the posterior precision is
//! `Λ = Σ₀⁻¹ + Σ_{k active} H_kᵀ R_k⁻¹ H_k` and the posterior mean solves
//! `Λ μ = Σ₀⁻¹ μ₀ + Σ H_kᵀ R_k⁻¹ z_k`. Deactivated sensors simply contribute
//! nothing, so the empty configuration falls out as the prior with no special
//! case. The posterior covariance — hence every `f`/`Y` value below — does
//! not depend on the observed values, only on which sensors were read; that
//! is what makes the exact `f(B)` table computable offline and the online
//! proxies cheap.

use nalgebra::{DMatrix, DVector};

use crate::model::{Configuration, GaussianFamily, SensorModel, Topology};
use crate::{Error, Result};

/// Mean and covariance of a Gaussian posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Posterior mean (the MMSE estimate).
    pub mean: DVector<f64>,
    /// Posterior covariance; its trace is the expected squared error.
    pub covariance: DMatrix<f64>,
}

impl PosteriorSummary {
    /// Expected squared estimation error `tr(covariance)`.
    pub fn mse(&self) -> f64 {
        self.covariance.trace()
    }
}

/// Exact posterior of `X` given the observations of the active sensors in
/// `b`, under the prior `family(θ)`.
///
/// `obs` must hold one reading per sensor (length `N`); only entries with
/// `b_k = 1` are touched, so callers may leave inactive slots stale.
pub fn gaussian_posterior(
    family: &GaussianFamily,
    sensors: &[SensorModel],
    b: Configuration,
    obs: &[DVector<f64>],
    theta: &[f64],
) -> Result<PosteriorSummary> {
    assert_eq!(b.len(), sensors.len(), "configuration width must match sensor count");
    assert_eq!(obs.len(), sensors.len(), "one observation slot per sensor");
    let prior_mean = family.mean(theta);
    let prior_cov = family.cov(theta);
    let q = prior_mean.len();

    // Degenerate prior (zero variance): the posterior is the prior point mass.
    let prior_info = match prior_cov.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => {
            if prior_cov.iter().all(|&v| v == 0.0) {
                return Ok(PosteriorSummary { mean: prior_mean, covariance: prior_cov });
            }
            return Err(Error::SingularInformation);
        }
    };

    let mut info = prior_info.clone();
    let mut info_vec = &prior_info * &prior_mean;
    for k in b.active() {
        let s = &sensors[k];
        let r_inv = s.r.clone().cholesky().ok_or(Error::SingularInformation)?.inverse();
        let ht_rinv = s.h.transpose() * r_inv;
        info += &ht_rinv * &s.h;
        info_vec += &ht_rinv * &obs[k];
    }

    let covariance = info.cholesky().ok_or(Error::SingularInformation)?.inverse();
    let mean = &covariance * info_vec;
    debug_assert_eq!(covariance.nrows(), q);
    Ok(PosteriorSummary { mean, covariance })
}

/// Expected squared error of the MMSE estimate under configuration `b`:
/// the trace of the posterior covariance, which is observation-free in the
/// linear-Gaussian model. This is the exact `f(B)`.
pub fn conditional_mse(
    family: &GaussianFamily,
    sensors: &[SensorModel],
    b: Configuration,
    theta: &[f64],
) -> Result<f64> {
    // Reuse the posterior with dummy observations: the covariance ignores them.
    let zeros: Vec<DVector<f64>> = sensors.iter().map(|s| DVector::zeros(s.h.nrows())).collect();
    Ok(gaussian_posterior(family, sensors, b, &zeros, theta)?.mse())
}

/// The per-slot error proxy `Y_B`: the posterior error trace computed under
/// the *current parameter estimate* `theta_t` rather than the truth.
///
/// In the Gaussian family this is data-free, so it equals
/// [`conditional_mse`] at `theta_t` for every observation; the observation
/// argument is kept because the proxy is defined per-slot on observed data.
pub fn y_b_proxy(
    family: &GaussianFamily,
    sensors: &[SensorModel],
    b: Configuration,
    _obs: &[DVector<f64>],
    theta_t: &[f64],
) -> Result<f64> {
    conditional_mse(family, sensors, b, theta_t)
}

/// Per-node initial estimates `X̄^{(k)}`: node `k`'s posterior mean given only
/// its own observation when active, the prior mean otherwise.
///
/// Scalar-state models only (the consensus combine stacks scalar estimates
/// into an `N`-vector).
pub fn local_initial_estimates(
    family: &GaussianFamily,
    sensors: &[SensorModel],
    b: Configuration,
    obs: &[DVector<f64>],
    theta_t: &[f64],
) -> Result<DVector<f64>> {
    assert_eq!(family.dim(), 1, "local consensus estimates are defined for scalar processes");
    let n = sensors.len();
    let mut xbar = DVector::zeros(n);
    for k in 0..n {
        let own = Configuration::zeros(n).with(k, b.get(k));
        xbar[k] = gaussian_posterior(family, sensors, own, obs, theta_t)?.mean[0];
    }
    Ok(xbar)
}

/// The distributed error proxy `Y_{K_B}`: expected network-average squared
/// error of the consensus-combined estimates `X̂ = K_B X̄` under the current
/// parameter estimate,
///
/// ```text
/// Y = σ²_B + (1/N) Σ_k (μ_B − X̂^{(k)})²,
/// ```
///
/// where `(μ_B, σ²_B)` is the full posterior given all active observations
/// and `X̄^{(k)}` are the per-node local estimates. With `K_B = I` this is the
/// average of the per-node local posterior errors; with one node and `K = 1`
/// it collapses to [`y_b_proxy`].
pub fn y_kb_proxy(
    family: &GaussianFamily,
    sensors: &[SensorModel],
    b: Configuration,
    obs: &[DVector<f64>],
    theta_t: &[f64],
    k_b: &DMatrix<f64>,
    topology: &Topology,
) -> Result<f64> {
    check_sparsity(k_b, topology)?;
    let n = sensors.len();
    let joint = gaussian_posterior(family, sensors, b, obs, theta_t)?;
    let mu = joint.mean[0];
    let var = joint.covariance[(0, 0)];
    let xbar = local_initial_estimates(family, sensors, b, obs, theta_t)?;
    let xhat = k_b * xbar;
    let bias: f64 = (0..n).map(|k| (mu - xhat[k]).powi(2)).sum::<f64>() / n as f64;
    Ok(var + bias)
}

/// Marginal log-likelihood of the active observations under parameter `theta`:
/// `log N(Z_B; H_B μ(θ), H_B Σ₀(θ) H_Bᵀ + diag(R_B))` with the active sensors'
/// readings stacked into `Z_B`. An empty configuration carries no evidence and
/// scores `0`.
///
/// This is the objective probed (at `θ ± dΔ`) by the simultaneous-perturbation
/// parameter update.
pub fn marginal_log_likelihood(
    family: &GaussianFamily,
    sensors: &[SensorModel],
    b: Configuration,
    obs: &[DVector<f64>],
    theta: &[f64],
) -> Result<f64> {
    if b.is_empty() {
        return Ok(0.0);
    }
    let mean0 = family.mean(theta);
    let cov0 = family.cov(theta);

    let rows: usize = b.active().map(|k| sensors[k].h.nrows()).sum();
    let q = mean0.len();
    let mut h = DMatrix::zeros(rows, q);
    let mut r = DMatrix::zeros(rows, rows);
    let mut z = DVector::zeros(rows);
    let mut at = 0;
    for k in b.active() {
        let s = &sensors[k];
        let m = s.h.nrows();
        h.view_mut((at, 0), (m, q)).copy_from(&s.h);
        r.view_mut((at, at), (m, m)).copy_from(&s.r);
        z.rows_mut(at, m).copy_from(&obs[k]);
        at += m;
    }

    let mean = &h * mean0;
    let cov = &h * cov0 * h.transpose() + r;
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::EvaluationFailed("singular marginal observation covariance".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let resid = z - mean;
    let solved = chol.solve(&resid);
    let quad = resid.dot(&solved);
    Ok(-0.5 * (rows as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}

/// Errors unless every off-topology, off-diagonal entry of `k_b` is exactly 0.
pub fn check_sparsity(k_b: &DMatrix<f64>, topology: &Topology) -> Result<()> {
    for i in 0..k_b.nrows() {
        for j in 0..k_b.ncols() {
            if !topology.supports(i, j) && k_b[(i, j)] != 0.0 {
                return Err(Error::SparsityViolation(i, j));
            }
        }
    }
    Ok(())
}
