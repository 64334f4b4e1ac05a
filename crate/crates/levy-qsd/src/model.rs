//! Parametric families of spectrally positive Levy processes and their
//! Laplace exponents.
//!
//! A process `X` here never jumps downward and has non-monotone paths. It is
//! described by the Laplace exponent `psi(beta) = log E[exp(-beta X_1)]`,
//! which is finite on `[0, inf)`, strictly convex where finite, and may be
//! `+inf` left of the exponential-moment boundary `-r`.
//!
//! Three families are supported:
//!
//! * [`LevyModel::BmDrift`]: `X_t = -mu t + sigma B_t`, with
//!   `psi(beta) = mu beta + sigma^2 beta^2 / 2`.
//! * [`LevyModel::CpExpDrift`]: drift `-mu` plus a compound Poisson process
//!   with intensity `c` and `Exp(rho)` jump sizes, with
//!   `psi(beta) = mu beta - c beta / (beta + rho)`.
//! * [`LevyModel::Meromorphic`]: Gaussian part plus a finite mixture of
//!   exponential jump components; `psi` is a rational function with poles at
//!   `-rho_i`. The exact parametrization is
//!
//!   ```text
//!   psi(beta) = -a beta + sigma^2 beta^2 / 2
//!             + sum_i a_i rho_i e^{-rho_i} (1/(beta+rho_i) - 1/rho_i + beta/rho_i^2)
//!             - beta sum_i a_i e^{-2 rho_i} (rho_i + 1) / rho_i
//!   ```
//!
//!   The weight factors `e^{-rho_i}` inside the jump sum and `e^{-2 rho_i}`
//!   inside the drift correction are part of this family's parametrization
//!   as defined here; a raw exponential-mixture jump density
//!   `sum_i a_i rho_i e^{-rho_i x}` would instead produce factors `1` and
//!   `e^{-rho_i}`. Every consumer in this crate (roots, scale functions,
//!   simulation) derives its quantities from this `psi`, so the family is
//!   self-consistent either way; only the meaning of the raw `(a_i, rho_i)`
//!   parameters differs between the two conventions.

use thiserror::Error;

use crate::numerics::NeumaierSum;

/// Value in `R ∪ {+inf}`; the codomain of `psi` on the negative half-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// Collapses to `f64`, mapping the infinite case to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
        }
    }
}

/// One exponential jump component of the meromorphic family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAtom {
    /// Weight `a_i > 0`.
    pub weight: f64,
    /// Rate `rho_i > 0`; rates must be strictly increasing across atoms.
    pub rate: f64,
}

/// A spectrally positive Levy process from one of the three supported
/// parametric families.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyModel {
    /// `X_t = -mu t + sigma B_t` with `mu > 0`, `sigma > 0`.
    BmDrift { mu: f64, sigma: f64 },
    /// Drift `-mu` plus compound Poisson jumps: intensity `c`, marks
    /// `Exp(rho)`.
    CpExpDrift { mu: f64, c: f64, rho: f64 },
    /// Gaussian coefficient `sigma >= 0`, linear coefficient `a`, and a
    /// finite list of exponential components with strictly increasing rates.
    Meromorphic {
        a: f64,
        sigma: f64,
        atoms: Vec<JumpAtom>,
    },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("meromorphic model needs at least one jump atom")]
    NoAtoms,
    #[error("meromorphic atom rates must be strictly increasing and positive")]
    RatesNotIncreasing,
    #[error("model has monotone paths (subordinator or pure drift); effective drift {drift}")]
    MonotonePaths { drift: f64 },
    #[error("beta = {beta} is outside the finite domain (boundary -r = {minus_r})")]
    OutOfDomain { beta: f64, minus_r: f64 },
    #[error("derivative order {0} unsupported (must be 1, 2 or 3)")]
    InvalidDerivativeOrder(u32),
    #[error("Esscher tilt theta = {theta} must be nonnegative")]
    EsscherNegativeTheta { theta: f64 },
    #[error("Esscher tilt theta = {theta} reaches the exponential-moment boundary r = {boundary}")]
    EsscherBeyondBoundary { theta: f64, boundary: f64 },
    #[error("Esscher tilt theta = {theta} gives psi'(-theta) = {slope} < 0 (theta above theta0)")]
    EsscherNegativeSlope { theta: f64, slope: f64 },
}

/// Which of the three non-monotonicity conditions the model satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathRegime {
    /// Nonzero Gaussian part.
    Gaussian,
    /// No Gaussian part, jumps of infinite variation. Cannot arise for the
    /// finite parametric families here; listed for completeness.
    InfiniteVariationJumps,
    /// No Gaussian part, finite-variation jumps compensated by a strictly
    /// negative drift.
    FiniteVariationDrift,
}

impl std::fmt::Display for PathRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathRegime::Gaussian => write!(f, "gaussian"),
            PathRegime::InfiniteVariationJumps => write!(f, "infinite-variation-jumps"),
            PathRegime::FiniteVariationDrift => write!(f, "finite-variation-drift"),
        }
    }
}

/// Outcome of [`LevyModel::validate`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationReport {
    pub condition: PathRegime,
    /// `psi'(0)`; positive exactly when a quasi-stationary distribution
    /// exists (the exponential-moment boundary is positive for all three
    /// families).
    pub psi_prime_zero: f64,
    /// Exponential-moment boundary `r` (`psi(-theta)` is finite for
    /// `theta < r`); `+inf` for Brownian motion with drift.
    pub exp_moment_boundary: f64,
    pub qsd_exists: bool,
}

/// Decomposition of the meromorphic exponent as
/// `psi(beta) = A + B beta + sigma^2 beta^2/2 + sum_i w_i/(beta + rho_i)`.
///
/// Unlike [`LevyModel::psi`], the evaluators here follow the *rational
/// continuation* across the poles `-rho_i`; the scale-function
/// factorization roots live beyond the first pole, where the Laplace
/// exponent proper is `+inf`.
#[derive(Debug, Clone)]
pub(crate) struct MeroRational {
    /// Residues `w_i = a_i rho_i e^{-rho_i}` at the poles `-rho_i`.
    pub weights: Vec<f64>,
    pub rates: Vec<f64>,
    pub sigma: f64,
    /// Constant term `A = -sum_i w_i / rho_i` (makes `psi(0) = 0`).
    pub constant: f64,
    /// Linear coefficient `B`; the process drift between jumps is `-B`.
    pub linear: f64,
}

impl MeroRational {
    /// Jump intensity of component `i` under the Levy-Ito decomposition:
    /// the jump part of `psi` is `sum_i lambda_i (rho_i/(beta+rho_i) - 1)`
    /// with `lambda_i = w_i / rho_i`.
    pub fn component_intensity(&self, i: usize) -> f64 {
        self.weights[i] / self.rates[i]
    }

    /// Drift of the path between jumps (negative for valid models with
    /// `sigma = 0`).
    pub fn path_drift(&self) -> f64 {
        -self.linear
    }

    /// Rational continuation of `psi` across the poles.
    pub fn psi_cont(&self, beta: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.add(self.constant);
        acc.add(self.linear * beta);
        acc.add(0.5 * self.sigma * self.sigma * beta * beta);
        for (w, rho) in self.weights.iter().zip(&self.rates) {
            acc.add(w / (beta + rho));
        }
        acc.total()
    }

    /// Derivatives (order 1..=3) of the rational continuation.
    pub fn dpsi_cont(&self, beta: f64, order: u32) -> f64 {
        let mut acc = NeumaierSum::new();
        match order {
            1 => {
                acc.add(self.linear);
                acc.add(self.sigma * self.sigma * beta);
                for (w, rho) in self.weights.iter().zip(&self.rates) {
                    let s = beta + rho;
                    acc.add(-w / (s * s));
                }
            }
            2 => {
                acc.add(self.sigma * self.sigma);
                for (w, rho) in self.weights.iter().zip(&self.rates) {
                    let s = beta + rho;
                    acc.add(2.0 * w / (s * s * s));
                }
            }
            3 => {
                for (w, rho) in self.weights.iter().zip(&self.rates) {
                    let s = beta + rho;
                    acc.add(-6.0 * w / (s * s * s * s));
                }
            }
            _ => unreachable!("order 1..=3"),
        }
        acc.total()
    }

    /// Complex evaluation of the continuation, for roots off the real axis.
    pub fn psi_cont_c(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(self.constant, 0.0);
        acc += self.linear * z + 0.5 * self.sigma * self.sigma * z * z;
        for (w, rho) in self.weights.iter().zip(&self.rates) {
            acc += w / (z + rho);
        }
        acc
    }

    pub fn dpsi_cont_c(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(self.linear, 0.0);
        acc += self.sigma * self.sigma * z;
        for (w, rho) in self.weights.iter().zip(&self.rates) {
            let s = z + rho;
            acc -= w / (s * s);
        }
        acc
    }
}

impl LevyModel {
    /// Exponential-moment boundary `r`: `psi(beta)` is finite for
    /// `beta > -r` and `+inf` for `beta <= -r`.
    pub fn exp_moment_boundary(&self) -> f64 {
        match self {
            LevyModel::BmDrift { .. } => f64::INFINITY,
            LevyModel::CpExpDrift { rho, .. } => *rho,
            LevyModel::Meromorphic { atoms, .. } => {
                atoms.first().map(|a| a.rate).unwrap_or(f64::INFINITY)
            }
        }
    }

    pub(crate) fn mero_rational(&self) -> Option<MeroRational> {
        match self {
            LevyModel::Meromorphic { a, sigma, atoms } => {
                let weights: Vec<f64> = atoms
                    .iter()
                    .map(|at| at.weight * at.rate * (-at.rate).exp())
                    .collect();
                let rates: Vec<f64> = atoms.iter().map(|at| at.rate).collect();
                let drift_correction: f64 = atoms
                    .iter()
                    .map(|at| at.weight * (-2.0 * at.rate).exp() * (at.rate + 1.0) / at.rate)
                    .sum();
                let compensator: f64 = weights
                    .iter()
                    .zip(&rates)
                    .map(|(w, r)| w / (r * r))
                    .sum();
                let constant: f64 = -weights
                    .iter()
                    .zip(&rates)
                    .map(|(w, r)| w / r)
                    .sum::<f64>();
                Some(MeroRational {
                    weights,
                    rates,
                    sigma: *sigma,
                    constant,
                    linear: -a + compensator - drift_correction,
                })
            }
            _ => None,
        }
    }

    /// Laplace exponent `psi(beta) = log E[exp(-beta X_1)]`.
    ///
    /// Total on all of `R`: returns `+inf` for `beta <= -r`.
    pub fn psi(&self, beta: f64) -> ExtendedReal {
        match self {
            LevyModel::BmDrift { mu, sigma } => {
                ExtendedReal::Finite(mu * beta + 0.5 * sigma * sigma * beta * beta)
            }
            LevyModel::CpExpDrift { mu, c, rho } => {
                if beta <= -rho {
                    ExtendedReal::PosInfinity
                } else {
                    ExtendedReal::Finite(mu * beta - c * beta / (beta + rho))
                }
            }
            LevyModel::Meromorphic { a, sigma, atoms } => {
                let boundary = atoms.first().map(|at| at.rate).unwrap_or(f64::INFINITY);
                if beta <= -boundary {
                    return ExtendedReal::PosInfinity;
                }
                let mut acc = NeumaierSum::new();
                acc.add(-a * beta);
                acc.add(0.5 * sigma * sigma * beta * beta);
                for at in atoms {
                    let w = at.weight * at.rate * (-at.rate).exp();
                    // 1/(b+r) - 1/r + b/r^2 == b^2 / (r^2 (b+r)); the right
                    // side is free of cancellation.
                    acc.add(w * beta * beta / (at.rate * at.rate * (beta + at.rate)));
                    acc.add(
                        -beta * at.weight * (-2.0 * at.rate).exp() * (at.rate + 1.0) / at.rate,
                    );
                }
                ExtendedReal::Finite(acc.total())
            }
        }
    }

    /// `psi(beta)` collapsed to `f64` (`+inf` outside the finite domain).
    pub(crate) fn psi_f(&self, beta: f64) -> f64 {
        self.psi(beta).as_f64()
    }

    /// Derivative of `psi` of the given order (1, 2 or 3) at `beta > -r`.
    ///
    /// The second derivative is strictly positive (strict convexity); the
    /// third is zero for `BmDrift` and strictly negative for the jump
    /// families.
    pub fn psi_deriv(&self, beta: f64, order: u32) -> Result<f64, ModelError> {
        if !(1..=3).contains(&order) {
            return Err(ModelError::InvalidDerivativeOrder(order));
        }
        let minus_r = -self.exp_moment_boundary();
        if beta <= minus_r {
            return Err(ModelError::OutOfDomain { beta, minus_r });
        }
        Ok(match self {
            LevyModel::BmDrift { mu, sigma } => match order {
                1 => mu + sigma * sigma * beta,
                2 => sigma * sigma,
                _ => 0.0,
            },
            LevyModel::CpExpDrift { mu, c, rho } => {
                let s = beta + rho;
                match order {
                    1 => mu - c * rho / (s * s),
                    2 => 2.0 * c * rho / (s * s * s),
                    _ => -6.0 * c * rho / (s * s * s * s),
                }
            }
            LevyModel::Meromorphic { a, sigma, atoms } => {
                let mut acc = NeumaierSum::new();
                match order {
                    1 => {
                        acc.add(-a);
                        acc.add(sigma * sigma * beta);
                        for at in atoms {
                            let w = at.weight * at.rate * (-at.rate).exp();
                            let s = beta + at.rate;
                            // d/db [b^2/(r^2(b+r))] = b(b+2r) / (r^2 (b+r)^2)
                            acc.add(w * beta * (beta + 2.0 * at.rate)
                                / (at.rate * at.rate * s * s));
                            acc.add(
                                -at.weight * (-2.0 * at.rate).exp() * (at.rate + 1.0) / at.rate,
                            );
                        }
                    }
                    2 => {
                        acc.add(sigma * sigma);
                        for at in atoms {
                            let w = at.weight * at.rate * (-at.rate).exp();
                            let s = beta + at.rate;
                            acc.add(2.0 * w / (s * s * s));
                        }
                    }
                    _ => {
                        for at in atoms {
                            let w = at.weight * at.rate * (-at.rate).exp();
                            let s = beta + at.rate;
                            acc.add(-6.0 * w / (s * s * s * s));
                        }
                    }
                }
                acc.total()
            }
        })
    }

    /// Checks the family invariants and reports the path regime, `psi'(0)`,
    /// the exponential-moment boundary and whether a quasi-stationary
    /// distribution exists (`psi'(0) > 0`).
    pub fn validate(&self) -> Result<ValidationReport, ModelError> {
        fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite and strictly positive",
                });
            }
            Ok(())
        }

        let condition = match self {
            LevyModel::BmDrift { mu, sigma } => {
                positive("mu", *mu)?;
                positive("sigma", *sigma)?;
                PathRegime::Gaussian
            }
            LevyModel::CpExpDrift { mu, c, rho } => {
                positive("mu", *mu)?;
                positive("c", *c)?;
                positive("rho", *rho)?;
                PathRegime::FiniteVariationDrift
            }
            LevyModel::Meromorphic { a, sigma, atoms } => {
                if !a.is_finite() {
                    return Err(ModelError::InvalidParameter {
                        name: "a",
                        value: *a,
                        reason: "must be finite",
                    });
                }
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(ModelError::InvalidParameter {
                        name: "sigma",
                        value: *sigma,
                        reason: "must be finite and nonnegative",
                    });
                }
                if atoms.is_empty() {
                    return Err(ModelError::NoAtoms);
                }
                let mut prev = 0.0;
                for at in atoms {
                    positive("atom weight", at.weight)?;
                    if !(at.rate.is_finite() && at.rate > prev) {
                        return Err(ModelError::RatesNotIncreasing);
                    }
                    prev = at.rate;
                }
                if *sigma > 0.0 {
                    PathRegime::Gaussian
                } else {
                    let rational = self.mero_rational().expect("meromorphic");
                    let drift = rational.path_drift();
                    if drift >= 0.0 {
                        return Err(ModelError::MonotonePaths { drift });
                    }
                    PathRegime::FiniteVariationDrift
                }
            }
        };

        let psi_prime_zero = self.psi_deriv(0.0, 1).expect("0 is interior");
        let exp_moment_boundary = self.exp_moment_boundary();
        Ok(ValidationReport {
            condition,
            psi_prime_zero,
            exp_moment_boundary,
            qsd_exists: psi_prime_zero > 0.0 && exp_moment_boundary > 0.0,
        })
    }

    /// Exponential tilt of the law: the returned model has Laplace exponent
    /// `psi_theta(beta) = psi(beta - theta) - psi(-theta)`.
    ///
    /// Valid for `0 <= theta < r` with `psi'(-theta) >= 0` (i.e. `theta` at
    /// most the critical tilt `theta0`). The transform stays inside the
    /// family, so all downstream machinery applies to the tilted model
    /// unchanged.
    pub fn esscher(&self, theta: f64) -> Result<LevyModel, ModelError> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(ModelError::EsscherNegativeTheta { theta });
        }
        if theta == 0.0 {
            return Ok(self.clone());
        }
        let boundary = self.exp_moment_boundary();
        if theta >= boundary {
            return Err(ModelError::EsscherBeyondBoundary { theta, boundary });
        }
        let slope = self.psi_deriv(-theta, 1)?;
        // theta0 is itself located by a root finder, so admit a hair of
        // negativity at the critical tilt.
        if slope < -1e-9 {
            return Err(ModelError::EsscherNegativeSlope { theta, slope });
        }
        Ok(match self {
            LevyModel::BmDrift { mu, sigma } => LevyModel::BmDrift {
                mu: mu - sigma * sigma * theta,
                sigma: *sigma,
            },
            LevyModel::CpExpDrift { mu, c, rho } => LevyModel::CpExpDrift {
                mu: *mu,
                c: c * rho / (rho - theta),
                rho: rho - theta,
            },
            LevyModel::Meromorphic { sigma, atoms, .. } => {
                let rational = self.mero_rational().expect("meromorphic");
                // Pole residues w_i are invariant under the tilt; solve the
                // new raw weights from w_i = a_i' rho_i' e^{-rho_i'}.
                let new_atoms: Vec<JumpAtom> = atoms
                    .iter()
                    .map(|at| JumpAtom {
                        weight: at.weight * at.rate / (at.rate - theta) * (-theta).exp(),
                        rate: at.rate - theta,
                    })
                    .collect();
                // The tilted exponent must have linear coefficient
                // B' = B - sigma^2 theta; solve for the raw coefficient a'.
                let compensator: f64 = rational
                    .weights
                    .iter()
                    .zip(new_atoms.iter())
                    .map(|(w, at)| w / (at.rate * at.rate))
                    .sum();
                let drift_correction: f64 = new_atoms
                    .iter()
                    .map(|at| at.weight * (-2.0 * at.rate).exp() * (at.rate + 1.0) / at.rate)
                    .sum();
                let target_linear = rational.linear - sigma * sigma * theta;
                LevyModel::Meromorphic {
                    a: compensator - drift_correction - target_linear,
                    sigma: *sigma,
                    atoms: new_atoms,
                }
            }
        })
    }
}
