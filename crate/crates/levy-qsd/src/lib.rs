//! Numerical toolkit for spectrally positive Levy processes killed on
//! exiting the half-line `[0, inf)`.
//!
//! The crate computes, for three parametric families of such processes:
//!
//! * the Laplace exponent `psi`, its derivatives, and exponential tilts
//!   ([`model`]);
//! * the critical tilt `theta0`, the critical decay rate
//!   `lambda0 = -psi(-theta0)` and the (extended) right inverse `Phi`
//!   ([`spectral`]);
//! * q-scale functions `W^(q)` for real `q`, including `q < 0`, by closed
//!   form, convolution series and a Volterra renewal equation, with
//!   Laplace-transform residual checks and potential densities ([`scale`]);
//! * the family of quasi-stationary distributions
//!   `nu_lambda(dx) = lambda W^(-lambda)(x) dx` for `0 < lambda <= lambda0`,
//!   with exact-tail sampling and stochastic-order checks ([`qsd`]);
//! * Monte Carlo simulation of the killed paths for statistical verification
//!   of the exit-time Laplace transform, exponential lifetimes and
//!   stationarity of the conditioned law ([`montecarlo`]).

pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod qsd;
pub mod scale;
pub mod spectral;
pub mod stats;

pub use model::{ExtendedReal, JumpAtom, LevyModel, ModelError, PathRegime, ValidationReport};
pub use montecarlo::{ExitSample, McError, McEstimate, SimConfig};
pub use qsd::{LambdaScanRow, OrderVerdict, QsdDensity, QsdError};
pub use scale::{GridSpec, ScaleClosedForm, ScaleError, ScaleGrid, ScaleMethod};
pub use spectral::{compute_spectral, SpectralData, SpectralError};
