//! Critical decay quantities of a model: the location `theta0` of the
//! minimum of `psi` on the negative half-axis, the critical rate
//! `lambda0 = -psi(-theta0)`, and the right inverse `Phi` of `psi` together
//! with its analytic extension down to `q = -lambda0`.

use thiserror::Error;

use crate::model::{LevyModel, ModelError};
use crate::numerics::{self, expand_upward, newton_bracketed, RootError, ROOT_ABS_TOL};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("q = {q} is below the critical value -lambda0 = {minus_lambda0}")]
    BelowCritical { q: f64, minus_lambda0: f64 },
}

/// Cached spectral quantities for one model.
///
/// Invariants: `lambda0 = -psi(-theta0)`, `0 <= theta0 < r`, and
/// `psi'(-theta0) = 0` whenever `theta0` is interior. Models without a
/// quasi-stationary distribution (`psi'(0) <= 0`) still produce a value with
/// `theta0 = lambda0 = 0`, so `phi` on `q >= 0` remains usable.
#[derive(Debug, Clone)]
pub struct SpectralData {
    model: LevyModel,
    theta0: f64,
    lambda0: f64,
    boundary: f64,
    /// Abscissa minimizing `psi` over `[-theta0, inf)`; equals `-theta0`
    /// when a QSD exists and is `>= 0` otherwise.
    psi_argmin: f64,
}

/// Computes `theta0`, `lambda0` and the exponential-moment boundary.
///
/// Closed forms are used for `BmDrift` and `CpExpDrift`; for the
/// meromorphic family `theta0` is the unique root of `psi'` on `(-rho_1, 0)`
/// found by safeguarded Newton on a sign-changing bracket.
pub fn compute_spectral(model: &LevyModel) -> Result<SpectralData, SpectralError> {
    let report = model.validate()?;
    let boundary = report.exp_moment_boundary;

    if report.psi_prime_zero <= 0.0 {
        // No QSD: psi is minimized at some beta >= 0.
        let psi_argmin = if report.psi_prime_zero == 0.0 {
            0.0
        } else {
            let f = |b: f64| model.psi_deriv(b, 1).unwrap_or(f64::NEG_INFINITY);
            let hi = expand_upward(f, 0.0, 1.0)?;
            newton_bracketed(f, |b| model.psi_deriv(b, 2).unwrap(), 0.0, hi, ROOT_ABS_TOL)?
        };
        return Ok(SpectralData {
            model: model.clone(),
            theta0: 0.0,
            lambda0: 0.0,
            boundary,
            psi_argmin,
        });
    }

    let (theta0, lambda0) = match model {
        LevyModel::BmDrift { mu, sigma } => {
            let s2 = sigma * sigma;
            (mu / s2, mu * mu / (2.0 * s2))
        }
        LevyModel::CpExpDrift { mu, c, rho } => {
            let theta0 = rho - (c * rho / mu).sqrt();
            let lambda0 = ((mu * rho).sqrt() - c.sqrt()).powi(2);
            (theta0, lambda0)
        }
        LevyModel::Meromorphic { .. } => {
            let rho1 = boundary;
            // psi' drops to -inf at the first pole, so a sign change against
            // psi'(0) > 0 is guaranteed.
            let lo = -rho1 + 1e-12 * rho1;
            let f = |b: f64| model.psi_deriv(b, 1).unwrap_or(f64::NEG_INFINITY);
            let df = |b: f64| model.psi_deriv(b, 2).unwrap_or(f64::INFINITY);
            let root = newton_bracketed(f, df, lo, 0.0, ROOT_ABS_TOL)?;
            let theta0 = -root;
            (theta0, -model.psi_f(root))
        }
    };

    Ok(SpectralData {
        model: model.clone(),
        theta0,
        lambda0,
        boundary,
        psi_argmin: -theta0,
    })
}

impl SpectralData {
    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Exponential-moment boundary `r` of the model.
    pub fn boundary(&self) -> f64 {
        self.boundary
    }

    /// Abscissa of the minimum of `psi` over its increasing-branch domain;
    /// `-theta0` when a QSD exists.
    pub(crate) fn psi_argmin(&self) -> f64 {
        self.psi_argmin
    }

    fn below_critical(&self, q: f64) -> SpectralError {
        SpectralError::BelowCritical {
            q,
            minus_lambda0: -self.lambda0,
        }
    }

    /// Right inverse of `psi`: the largest `beta >= 0` with
    /// `psi(beta) = q`, for `q >= 0`.
    pub fn phi(&self, q: f64) -> f64 {
        assert!(q >= 0.0, "phi requires q >= 0, got {q}");
        if q == 0.0 && self.model.psi_deriv(0.0, 1).unwrap() >= 0.0 {
            return 0.0;
        }
        self.increasing_branch_root(q)
            .expect("increasing branch root exists for q >= 0")
    }

    /// Increasing-branch inverse of `psi`, extended to `q in [-lambda0, inf)`:
    /// the unique `beta >= -theta0` with `psi(beta) = q`. At the left
    /// endpoint it returns `-theta0` (the limit value).
    pub fn phi_extended(&self, q: f64) -> Result<f64, SpectralError> {
        if q >= 0.0 {
            return Ok(self.phi(q));
        }
        let tol = 1e-12 * self.lambda0.max(1.0);
        if q + self.lambda0 < -tol {
            return Err(self.below_critical(q));
        }
        if q + self.lambda0 <= tol {
            return Ok(-self.theta0);
        }
        self.increasing_branch_root(q)
    }

    /// Root on the increasing branch without the `q >= -lambda0` gate of
    /// [`SpectralData::phi_extended`]; callers must ensure `q` is at least
    /// the minimum of `psi` over the branch domain (for models without a
    /// QSD that minimum is negative even though `lambda0 = 0`).
    pub(crate) fn increasing_branch_root(&self, q: f64) -> Result<f64, SpectralError> {
        match &self.model {
            LevyModel::BmDrift { mu, sigma } => {
                let s2 = sigma * sigma;
                let disc = (mu * mu + 2.0 * q * s2).max(0.0).sqrt();
                // 2q / (sqrt(mu^2 + 2 q sigma^2) + mu) avoids cancellation
                // near q = 0 and is exact at q = -lambda0.
                Ok(2.0 * q / (disc + mu))
            }
            LevyModel::CpExpDrift { mu, c, rho } => {
                let gamma = mu * rho - c - q;
                let disc = (gamma * gamma + 4.0 * mu * rho * q).max(0.0).sqrt();
                // Larger root of mu b^2 + gamma b - q rho, in the
                // cancellation-free arrangement for either sign of gamma.
                Ok(if gamma > 0.0 {
                    2.0 * rho * q / (gamma + disc)
                } else {
                    (-gamma + disc) / (2.0 * mu)
                })
            }
            LevyModel::Meromorphic { .. } => {
                let f = |b: f64| self.model.psi_f(b) - q;
                let df = |b: f64| self.model.psi_deriv(b, 1).unwrap_or(f64::INFINITY);
                let lo = if q >= 0.0 && self.psi_argmin < 0.0 {
                    0.0
                } else {
                    self.psi_argmin
                };
                if f(lo) > 0.0 {
                    // Within root-finder noise of the bottom of the branch.
                    return Ok(lo);
                }
                let hi = expand_upward(f, lo, self.theta0.max(1.0))?;
                Ok(newton_bracketed(f, df, lo, hi, ROOT_ABS_TOL)?)
            }
        }
    }

    /// Derivative of the extended inverse: `phi'(q) = 1 / psi'(phi(q))`.
    ///
    /// Diverges to `+inf` as `q` approaches `-lambda0` when the minimum of
    /// `psi` is interior.
    pub fn phi_prime(&self, q: f64) -> Result<f64, SpectralError> {
        let beta = self.phi_extended(q)?;
        let slope = self.model.psi_deriv(beta, 1)?;
        Ok(1.0 / slope)
    }

    /// `psi(beta)` of the underlying model collapsed to `f64` (`+inf` when
    /// outside the finite domain).
    pub fn psi(&self, beta: f64) -> f64 {
        self.model.psi_f(beta)
    }

    /// Uniformly spaced probe points spanning `(-c lambda0, hi]`, used by
    /// verification routines.
    pub fn q_probe_grid(&self, n: usize, hi: f64) -> Vec<f64> {
        let lo = -0.999 * self.lambda0;
        numerics::linspace(lo, hi, n)
    }
}
