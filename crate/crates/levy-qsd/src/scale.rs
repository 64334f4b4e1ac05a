//! q-scale functions `W^(q)` of a spectrally positive model.
//!
//! `W^(q)` is zero on `(-inf, 0)` and is characterized on `[0, inf)` by the
//! Laplace transform `int_0^inf e^{-beta x} W^(q)(x) dx = 1/(psi(beta) - q)`
//! for `beta > Phi(|q|)`. Three evaluation routes are provided and cross
//! checked against each other:
//!
//! * **closed form** per family (hyperbolic/trigonometric for `BmDrift` and
//!   `CpExpDrift`; a residue expansion over the roots of `psi = q` for the
//!   meromorphic family, including the double-root branch at the critical
//!   `q = -lambda0` and a complex-pair branch below it);
//! * **convolution series** `W^(q) = sum_k q^k W^{*(k+1)}` built by iterated
//!   trapezoid convolution of the 0-scale function;
//! * **renewal equation** `f = W^(r) + (q - r) W^(r) * f`, solved by forward
//!   substitution as a Volterra equation of the second kind.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::LevyModel;
use crate::numerics::{
    bisect, cosh_sqrt, expand_upward, newton_bracketed, sinhc_sqrt, trapezoid, NeumaierSum,
    RootError, ROOT_ABS_TOL,
};
use crate::spectral::{SpectralData, SpectralError};

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("convolution series did not converge within {terms} terms (sup of last term {sup:e})")]
    SeriesDiverged { terms: usize, sup: f64 },
    #[error("renewal diagonal weight {diag:e} too close to zero; refine the step size")]
    RenewalSingularDiagonal { diag: f64 },
    #[error("no analytic tail: q = {q} is below the critical value {crit}")]
    NoAnalyticTail { q: f64, crit: f64 },
    #[error("lambda = {lambda} outside (0, lambda0 = {lambda0}]")]
    LambdaOutOfRange { lambda: f64, lambda0: f64 },
    #[error("complex root search failed for q = {q}")]
    ComplexRootFailed { q: f64 },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

/// Uniform grid `0, h, 2h, ..., n h`.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub h: f64,
    pub x_max: f64,
}

impl GridSpec {
    pub fn new(h: f64, x_max: f64) -> Self {
        assert!(h > 0.0 && x_max >= h, "invalid grid: h={h}, x_max={x_max}");
        Self { h, x_max }
    }

    pub fn steps(&self) -> usize {
        (self.x_max / self.h).round().max(1.0) as usize
    }

    pub fn n_points(&self) -> usize {
        self.steps() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMethod {
    ClosedForm,
    Series,
    Renewal,
}

/// Tabulation of `W^(q)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct ScaleGrid {
    pub q: f64,
    pub h: f64,
    pub values: Vec<f64>,
    pub method: ScaleMethod,
    /// Heuristic bound on the sup-norm error of `values`.
    pub err_estimate: f64,
}

impl ScaleGrid {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x((self.values.len().max(1)) - 1)
    }

    /// Linear interpolation on `[0, x_max]`; zero for `x < 0`, `None` past
    /// the grid.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        if x < 0.0 {
            return Some(0.0);
        }
        let pos = x / self.h;
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            if i + 1 == self.values.len() && pos - i as f64 == 0.0 {
                return Some(self.values[i]);
            }
            return None;
        }
        let frac = pos - i as f64;
        Some(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// Sup-norm distance against another grid of identical geometry.
    pub fn sup_distance(&self, other: &ScaleGrid) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        assert_eq!(self.h, other.h);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Asymptotic form `W^(q)(x) ~ (cst + lin x) e^{rate x}` for large `x`.
///
/// Above the critical `q` this is the simple-pole tail
/// `Phi'(q) e^{Phi(q) x}`; at the critical value the double root contributes
/// the linear factor.
#[derive(Debug, Clone, Copy)]
pub struct ExpTail {
    pub cst: f64,
    pub lin: f64,
    pub rate: f64,
}

impl ExpTail {
    pub fn eval(&self, x: f64) -> f64 {
        (self.cst + self.lin * x) * (self.rate * x).exp()
    }

    /// `int_{x0}^inf e^{-s x} (cst + lin x) e^{rate x} dx`; requires
    /// `s > rate`.
    pub fn integral_beyond(&self, x0: f64, s: f64) -> f64 {
        let omega = s - self.rate;
        assert!(omega > 0.0, "tail integral needs s > rate");
        (-omega * x0).exp() * ((self.cst + self.lin * x0) / omega + self.lin / (omega * omega))
    }
}

/// `(cst + lin x) e^{rate x}` component of a residue expansion.
#[derive(Debug, Clone, Copy)]
struct ExpTerm {
    cst: f64,
    lin: f64,
    rate: f64,
}

/// Contribution `2 e^{ux} (cre cos(vx) - cim sin(vx))` of a conjugate pair
/// of roots `u +- iv` with residue coefficient `cre + i cim`.
#[derive(Debug, Clone, Copy)]
struct OscTerm {
    u: f64,
    v: f64,
    cre: f64,
    cim: f64,
}

#[derive(Debug, Clone)]
enum ClosedBody {
    Bm { mu: f64, s2: f64, delta: f64 },
    Cp { mu: f64, rho: f64, gamma: f64, d: f64 },
    MeroExp { terms: Vec<ExpTerm> },
    MeroOsc { osc: OscTerm, terms: Vec<ExpTerm> },
}

/// Reusable closed-form evaluator of `x -> W^(q)(x)` for a fixed `q`.
#[derive(Debug, Clone)]
pub struct ScaleClosedForm {
    q: f64,
    body: ClosedBody,
}

/// `q` at which the two leading exponents of `W^(q)` collide (`-lambda0`
/// whenever a QSD exists).
fn critical_q(spectral: &SpectralData) -> f64 {
    match spectral.model() {
        LevyModel::BmDrift { mu, sigma } => -(mu * mu) / (2.0 * sigma * sigma),
        LevyModel::CpExpDrift { mu, c, rho } => -((mu * rho).sqrt() - c.sqrt()).powi(2),
        LevyModel::Meromorphic { .. } => {
            if spectral.lambda0() > 0.0 {
                -spectral.lambda0()
            } else {
                spectral.psi(spectral.psi_argmin())
            }
        }
    }
}

/// Relative half-width of the window around the critical `q` in which the
/// double-root branch is used.
const DEGENERATE_WINDOW: f64 = 1e-8;

fn degenerate_tol(crit: f64) -> f64 {
    DEGENERATE_WINDOW * crit.abs().max(1.0)
}

impl ScaleClosedForm {
    pub fn build(spectral: &SpectralData, q: f64) -> Result<Self, ScaleError> {
        let body = match spectral.model() {
            LevyModel::BmDrift { mu, sigma } => {
                let s2 = sigma * sigma;
                ClosedBody::Bm { mu: *mu, s2, delta: mu * mu + 2.0 * q * s2 }
            }
            LevyModel::CpExpDrift { mu, c, rho } => {
                let gamma = mu * rho - c - q;
                ClosedBody::Cp { mu: *mu, rho: *rho, gamma, d: gamma * gamma + 4.0 * mu * rho * q }
            }
            LevyModel::Meromorphic { .. } => build_mero_body(spectral, q)?,
        };
        Ok(Self { q, body })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `W^(q)(x)`; zero for negative `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.body {
            // W = (2x/s2) e^{-mu x/s2} sinhc(delta x^2 / s2^2); entire in
            // delta, so the degenerate and oscillatory regimes need no
            // separate branches.
            ClosedBody::Bm { mu, s2, delta } => {
                let u = delta * x * x / (s2 * s2);
                (2.0 * x / s2) * (-mu * x / s2).exp() * sinhc_sqrt(u)
            }
            ClosedBody::Cp { mu, rho, gamma, d } => {
                let u = d * x * x / (4.0 * mu * mu);
                let half = x / (2.0 * mu);
                (-gamma * half).exp()
                    * ((-gamma / mu + 2.0 * rho) * half * sinhc_sqrt(u) + cosh_sqrt(u) / mu)
            }
            ClosedBody::MeroExp { terms } => eval_exp_terms(terms, x),
            ClosedBody::MeroOsc { osc, terms } => {
                let envelope = 2.0 * (osc.u * x).exp();
                envelope * (osc.cre * (osc.v * x).cos() - osc.cim * (osc.v * x).sin())
                    + eval_exp_terms(terms, x)
            }
        }
    }
}

fn eval_exp_terms(terms: &[ExpTerm], x: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for t in terms {
        acc.add((t.cst + t.lin * x) * (t.rate * x).exp());
    }
    acc.total()
}

/// Real roots of `psi = q` left of the increasing branch (in the sense of
/// the rational continuation of `psi` across its poles), returned as the
/// positives `zeta` with `psi(-zeta) = q`, ascending. There is one root per
/// pole gap `(rho_{i-1}, rho_i)`, one below the first pole (skipped when
/// `include_first` is false), and one beyond the last pole when the model
/// has a Gaussian part.
fn mero_zetas(
    spectral: &SpectralData,
    q: f64,
    include_first: bool,
) -> Result<Vec<f64>, ScaleError> {
    let model = spectral.model();
    let LevyModel::Meromorphic { sigma, atoms, .. } = model else {
        return Err(ScaleError::Precondition("meromorphic model required"));
    };
    let rational = model.mero_rational().expect("meromorphic");
    let g = |zeta: f64| rational.psi_cont(-zeta) - q;
    let dg = |zeta: f64| -rational.dpsi_cont(-zeta, 1);
    let mut zetas = Vec::new();

    if include_first {
        // Decreasing branch: between the bottom of psi and the first pole.
        let rho1 = atoms[0].rate;
        let lo = -spectral.psi_argmin();
        let mut delta = 1e-3 * rho1;
        while g(rho1 - delta) <= 0.0 {
            delta *= 0.5;
            if delta < 1e-14 * rho1 {
                return Err(ScaleError::Precondition(
                    "no sign change below the first pole; q below the critical value?",
                ));
            }
        }
        zetas.push(newton_bracketed(g, dg, lo, rho1 - delta, ROOT_ABS_TOL)?);
    }

    // One root strictly between consecutive poles.
    for pair in atoms.windows(2) {
        let (lo_pole, hi_pole) = (pair[0].rate, pair[1].rate);
        let width = hi_pole - lo_pole;
        let mut dlo = 1e-3 * width;
        while g(lo_pole + dlo) >= 0.0 {
            dlo *= 0.5;
            if dlo < 1e-14 * width {
                return Err(ScaleError::Precondition("pole-gap bracket collapse (left)"));
            }
        }
        let mut dhi = 1e-3 * width;
        while g(hi_pole - dhi) <= 0.0 {
            dhi *= 0.5;
            if dhi < 1e-14 * width {
                return Err(ScaleError::Precondition("pole-gap bracket collapse (right)"));
            }
        }
        zetas.push(newton_bracketed(
            g,
            dg,
            lo_pole + dlo,
            hi_pole - dhi,
            ROOT_ABS_TOL,
        )?);
    }

    // With a Gaussian part the quadratic growth of psi adds one root beyond
    // the last pole.
    if *sigma > 0.0 {
        let last = atoms.last().unwrap().rate;
        let mut dlo = 1e-3 * last.max(1.0);
        while g(last + dlo) >= 0.0 {
            dlo *= 0.5;
            if dlo < 1e-14 * last.max(1.0) {
                return Err(ScaleError::Precondition("bracket collapse beyond last pole"));
            }
        }
        let lo = last + dlo;
        let hi = expand_upward(g, lo, last.max(1.0))?;
        zetas.push(newton_bracketed(g, dg, lo, hi, ROOT_ABS_TOL)?);
    }
    Ok(zetas)
}

/// Roots `zeta_i(q)` of the meromorphic factorization (`psi(-zeta_i) = q`),
/// ascending. Requires `q` above the critical value, where all of them are
/// real and simple. The list has one entry per atom, plus one more when the
/// model has a Gaussian part.
pub fn meromorphic_roots(spectral: &SpectralData, q: f64) -> Result<Vec<f64>, ScaleError> {
    let crit = critical_q(spectral);
    if q <= crit + degenerate_tol(crit) {
        return Err(ScaleError::NoAnalyticTail { q, crit });
    }
    mero_zetas(spectral, q, true)
}

fn build_mero_body(spectral: &SpectralData, q: f64) -> Result<ClosedBody, ScaleError> {
    let model = spectral.model();
    let rational = model.mero_rational().expect("meromorphic");
    let crit = critical_q(spectral);
    let tol = degenerate_tol(crit);

    let zeta_terms = |include_first: bool| -> Result<Vec<ExpTerm>, ScaleError> {
        Ok(mero_zetas(spectral, q, include_first)?
            .into_iter()
            .map(|zeta| ExpTerm {
                cst: 1.0 / rational.dpsi_cont(-zeta, 1),
                lin: 0.0,
                rate: -zeta,
            })
            .collect())
    };

    if q > crit + tol {
        // Simple roots: increasing-branch root plus the zeta family. The
        // root exists for every q above the branch minimum, also for
        // models without a QSD where phi_extended would refuse q < 0.
        let phi = if q >= 0.0 {
            spectral.phi(q)
        } else {
            spectral.increasing_branch_root(q)?
        };
        let mut terms = vec![ExpTerm {
            cst: 1.0 / model.psi_deriv(phi, 1)?,
            lin: 0.0,
            rate: phi,
        }];
        terms.extend(zeta_terms(true)?);
        Ok(ClosedBody::MeroExp { terms })
    } else if q >= crit - tol {
        // Double root at the bottom of the increasing branch.
        let phi = spectral.psi_argmin();
        let pp = model.psi_deriv(phi, 2)?;
        let ppp = model.psi_deriv(phi, 3)?;
        let mut terms = vec![ExpTerm {
            cst: -2.0 * ppp / (3.0 * pp * pp),
            lin: 2.0 / pp,
            rate: phi,
        }];
        terms.extend(zeta_terms(false)?);
        Ok(ClosedBody::MeroExp { terms })
    } else {
        // Below the critical value the two leading roots form a conjugate
        // pair; locate it by complex Newton seeded from the local quadratic
        // expansion around the bottom of psi.
        let argmin = spectral.psi_argmin();
        let pp = model.psi_deriv(argmin, 2)?;
        let v0 = (2.0 * (crit - q) / pp).sqrt();
        let mut z = Complex64::new(argmin, v0);
        let mut converged = false;
        for _ in 0..100 {
            let f = rational.psi_cont_c(z) - q;
            if f.norm() <= 1e-12 * q.abs().max(1.0) {
                converged = true;
                break;
            }
            let d = rational.dpsi_cont_c(z);
            if d.norm() == 0.0 {
                break;
            }
            z -= f / d;
        }
        if !converged || z.im.abs() < 1e-14 {
            return Err(ScaleError::ComplexRootFailed { q });
        }
        if z.im < 0.0 {
            z = z.conj();
        }
        let c = Complex64::new(1.0, 0.0) / rational.dpsi_cont_c(z);
        Ok(ClosedBody::MeroOsc {
            osc: OscTerm { u: z.re, v: z.im, cre: c.re, cim: c.im },
            terms: zeta_terms(false)?,
        })
    }
}

/// One-shot closed-form evaluation of `W^(q)(x)`.
pub fn scale_closed_form(spectral: &SpectralData, q: f64, x: f64) -> Result<f64, ScaleError> {
    Ok(ScaleClosedForm::build(spectral, q)?.eval(x))
}

/// Closed-form tabulation on a uniform grid.
pub fn scale_grid_closed(
    spectral: &SpectralData,
    q: f64,
    grid: &GridSpec,
) -> Result<ScaleGrid, ScaleError> {
    let cf = ScaleClosedForm::build(spectral, q)?;
    let n = grid.n_points();
    let values: Vec<f64> = (0..n).map(|i| cf.eval(i as f64 * grid.h)).collect();
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ScaleGrid {
        q,
        h: grid.h,
        values,
        method: ScaleMethod::ClosedForm,
        err_estimate: 1e-14 * sup.max(1.0),
    })
}

fn sup_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Trapezoid convolution `(f * g)(x_i)` on the shared grid, scaled by `q`.
fn convolve_scaled(f: &[f64], g: &[f64], h: f64, q: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    out[1..]
        .par_iter_mut()
        .enumerate()
        .for_each(|(k, slot)| {
            let i = k + 1;
            let mut acc = 0.5 * (f[0] * g[i] + f[i] * g[0]);
            for j in 1..i {
                acc += f[j] * g[i - j];
            }
            *slot = q * h * acc;
        });
    out
}

const SERIES_MAX_TERMS: usize = 200;
const SERIES_REL_CUTOFF: f64 = 1e-10;

/// Partial sums of `W^(q) = sum_k q^k W^{*(k+1)}` with the 0-scale function
/// as base, truncated when the latest term falls below `1e-10` of the
/// accumulated sup-norm.
pub fn scale_series(
    spectral: &SpectralData,
    q: f64,
    grid: &GridSpec,
) -> Result<ScaleGrid, ScaleError> {
    let base = scale_grid_closed(spectral, 0.0, grid)?;
    if q == 0.0 {
        return Ok(ScaleGrid { method: ScaleMethod::Series, ..base });
    }
    let h = grid.h;
    let mut acc = base.values.clone();
    let mut term = base.values.clone();
    let mut prev_sup = sup_abs(&term);
    for k in 1..=SERIES_MAX_TERMS {
        term = convolve_scaled(&term, &base.values, h, q);
        let sup_term = sup_abs(&term);
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += *t;
        }
        if !sup_term.is_finite() {
            return Err(ScaleError::SeriesDiverged { terms: k, sup: sup_term });
        }
        let sup_acc = sup_abs(&acc);
        if sup_term < SERIES_REL_CUTOFF * sup_acc {
            let ratio = (sup_term / prev_sup).min(0.9);
            let truncation = sup_term * ratio / (1.0 - ratio);
            // Trapezoid convolution is O(h^2); scale a crude curvature bound
            // by the series growth factor.
            let growth = (q.abs() * trapezoid(&base.values, h)).exp();
            let curvature = base
                .values
                .windows(3)
                .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
                .fold(0.0f64, f64::max)
                / (h * h);
            let quad = curvature * h * h / 12.0 * grid.x_max * growth;
            return Ok(ScaleGrid {
                q,
                h,
                values: acc,
                method: ScaleMethod::Series,
                err_estimate: truncation + quad,
            });
        }
        prev_sup = sup_term;
    }
    Err(ScaleError::SeriesDiverged { terms: SERIES_MAX_TERMS, sup: prev_sup })
}

/// Solves `f = W^(r) + (q - r) W^(r) * f` on the grid by forward
/// substitution with trapezoid weights; the solution is `W^(q)`.
pub fn scale_renewal(
    spectral: &SpectralData,
    q: f64,
    r: f64,
    grid: &GridSpec,
) -> Result<ScaleGrid, ScaleError> {
    if r < 0.0 {
        return Err(ScaleError::Precondition("renewal base r must be >= 0"));
    }
    let wr = scale_grid_closed(spectral, r, grid)?;
    if q == r {
        return Ok(ScaleGrid { method: ScaleMethod::Renewal, ..wr });
    }
    let v = &wr.values;
    let n = v.len();
    let h = grid.h;
    let coef = q - r;
    let diag = 1.0 - coef * 0.5 * h * v[0];
    if diag.abs() < 1e-8 {
        return Err(ScaleError::RenewalSingularDiagonal { diag });
    }
    let mut f = vec![0.0; n];
    f[0] = v[0];
    for i in 1..n {
        let mut acc = 0.5 * v[i] * f[0];
        for j in 1..i {
            acc += v[i - j] * f[j];
        }
        f[i] = (v[i] + coef * h * acc) / diag;
    }
    let curvature = f
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .fold(0.0f64, f64::max)
        / (h * h);
    let err = curvature * h * h / 12.0 * grid.x_max * (1.0 + coef.abs());
    Ok(ScaleGrid { q, h, values: f, method: ScaleMethod::Renewal, err_estimate: err })
}

/// Leading large-`x` behaviour of `W^(q)`; errors for `q` below the
/// critical value, where the expansion oscillates.
pub fn scale_tail(spectral: &SpectralData, q: f64) -> Result<ExpTail, ScaleError> {
    let crit = critical_q(spectral);
    let tol = degenerate_tol(crit);
    if q > crit + tol {
        let rate = if q >= 0.0 {
            spectral.phi(q)
        } else {
            spectral.increasing_branch_root(q)?
        };
        let cst = 1.0 / spectral.model().psi_deriv(rate, 1)?;
        return Ok(ExpTail { cst, lin: 0.0, rate });
    }
    if q < crit - tol {
        return Err(ScaleError::NoAnalyticTail { q, crit });
    }
    Ok(match spectral.model() {
        LevyModel::BmDrift { mu, sigma } => {
            let s2 = sigma * sigma;
            ExpTail { cst: 0.0, lin: 2.0 / s2, rate: -mu / s2 }
        }
        LevyModel::CpExpDrift { mu, c, rho } => {
            let srt = (c / (mu * rho)).sqrt();
            ExpTail {
                cst: 1.0 / mu,
                lin: rho / mu * srt,
                rate: -(rho - (c * rho / mu).sqrt()),
            }
        }
        LevyModel::Meromorphic { .. } => {
            let phi = spectral.psi_argmin();
            let pp = spectral.model().psi_deriv(phi, 2)?;
            let ppp = spectral.model().psi_deriv(phi, 3)?;
            ExpTail {
                cst: -2.0 * ppp / (3.0 * pp * pp),
                lin: 2.0 / pp,
                rate: phi,
            }
        }
    })
}

/// Residual of the defining Laplace identity,
/// `|int_0^inf e^{-beta x} W^(q)(x) dx - 1/(psi(beta) - q)|`, with the
/// integral split into trapezoid quadrature on the grid plus the analytic
/// tail beyond it. Requires `beta > Phi(|q|) + 0.1`.
pub fn laplace_residual(
    spectral: &SpectralData,
    sg: &ScaleGrid,
    beta: f64,
) -> Result<f64, ScaleError> {
    let q = sg.q;
    assert!(
        beta > spectral.phi(q.abs()) + 0.1,
        "laplace_residual needs beta > phi(|q|) + 0.1"
    );
    let damped: Vec<f64> = sg
        .values
        .iter()
        .enumerate()
        .map(|(i, w)| (-beta * sg.x(i)).exp() * w)
        .collect();
    let quad = trapezoid(&damped, sg.h);
    let tail = scale_tail(spectral, q)?.integral_beyond(sg.x_max(), beta);
    let target = 1.0 / (spectral.psi(beta) - q);
    Ok((quad + tail - target).abs())
}

/// Density of the q-potential measure of the process killed below zero:
/// `u^(q)(x, y) = e^{-x Phi(q)} W^(q)(y) - W^(q)(y - x)`.
pub fn potential_density(
    spectral: &SpectralData,
    q: f64,
    x: f64,
    y: f64,
) -> Result<f64, ScaleError> {
    if q < 0.0 || x < 0.0 || y < 0.0 {
        return Err(ScaleError::Precondition("potential density needs q, x, y >= 0"));
    }
    if q == 0.0 && spectral.model().psi_deriv(0.0, 1)? < 0.0 {
        return Err(ScaleError::Precondition(
            "q = 0 potential requires certain killing (psi'(0) >= 0)",
        ));
    }
    let cf = ScaleClosedForm::build(spectral, q)?;
    Ok((-x * spectral.phi(q)).exp() * cf.eval(y) - cf.eval(y - x))
}

/// Tilted scale function `W_{Phi(-lambda)}(x) = e^{-Phi(-lambda) x}
/// W^(-lambda)(x)` for `0 < lambda <= lambda0`; increasing in `x` with
/// limit `Phi'(-lambda)`.
pub fn w_phi(spectral: &SpectralData, lambda: f64, x: f64) -> Result<f64, ScaleError> {
    let lambda0 = spectral.lambda0();
    if !(lambda > 0.0 && lambda <= lambda0 * (1.0 + 1e-9)) {
        return Err(ScaleError::LambdaOutOfRange { lambda, lambda0 });
    }
    let phi = spectral.phi_extended(-lambda)?;
    let cf = ScaleClosedForm::build(spectral, -lambda)?;
    Ok((-phi * x).exp() * cf.eval(x))
}

/// Convenience: locate a root of `psi(beta) = q` on a user-supplied bracket
/// (used by diagnostics and tests).
pub fn psi_root_on(
    spectral: &SpectralData,
    q: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, ScaleError> {
    Ok(bisect(|b| spectral.psi(b) - q, lo, hi, ROOT_ABS_TOL)?)
}
