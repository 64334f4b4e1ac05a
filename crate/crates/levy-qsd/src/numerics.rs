//! Shared numerical kernels: bracketed root finding, compensated summation,
//! trapezoid quadrature on uniform grids and the entire functions
//! `sinh(sqrt(u))/sqrt(u)`, `cosh(sqrt(u))` used by the scale-function
//! closed forms.

use thiserror::Error;

/// Absolute tolerance on root abscissae.
pub const ROOT_ABS_TOL: f64 = 1e-13;
const MAX_ROOT_ITER: usize = 250;

#[derive(Debug, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f(lo)={flo:e}, f(hi)={fhi:e})")]
    NoSignChange { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("root iteration did not converge (last iterate {last})")]
    NotConverged { last: f64 },
    #[error("failed to expand a bracket starting from {start}")]
    BracketExpansion { start: f64 },
}

/// Safeguarded Newton on a sign-changing bracket: every iterate stays inside
/// the current bracket and the bracket shrinks monotonically, so this
/// degrades to bisection whenever Newton misbehaves (flat derivative,
/// near-double roots).
pub fn newton_bracketed<F, D>(f: F, df: D, lo: f64, hi: f64, tol: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(RootError::NoSignChange { lo, hi, flo, fhi });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ROOT_ITER {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if hi - lo <= tol {
            // Midpoint of the final bracket; both endpoints are within tol.
            return Ok(0.5 * (lo + hi));
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let _ = fhi;
    Err(RootError::NotConverged { last: x })
}

/// Plain bisection on a sign-changing bracket.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> f64,
{
    newton_bracketed(f, |_| 0.0, lo, hi, tol)
}

/// Doubles `hi` away from `lo` until `f(hi)` has the opposite sign of
/// `f(lo)`. Returns the expanded upper endpoint.
pub fn expand_upward<F>(f: F, lo: f64, first_step: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let mut step = first_step.abs().max(1e-8);
    for _ in 0..200 {
        let hi = lo + step;
        let fhi = f(hi);
        if fhi.is_finite() && fhi.signum() != flo.signum() {
            return Ok(hi);
        }
        step *= 2.0;
    }
    Err(RootError::BracketExpansion { start: lo })
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.total()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * (i as f64) / ((n - 1) as f64))
            .collect(),
    }
}

/// Trapezoid rule on a uniform grid with step `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = NeumaierSum::new();
    acc.add(0.5 * values[0]);
    for &v in &values[1..n - 1] {
        acc.add(v);
    }
    acc.add(0.5 * values[n - 1]);
    h * acc.total()
}

/// Cumulative trapezoid table: out[i] = integral over [x0, x_i].
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = NeumaierSum::new();
    out.push(0.0);
    for w in values.windows(2) {
        acc.add(0.5 * h * (w[0] + w[1]));
        out.push(acc.total());
    }
    out
}

// sinh(sqrt(u))/sqrt(u) and cosh(sqrt(u)) extended to all real u: for u < 0
// they become sin(sqrt(-u))/sqrt(-u) and cos(sqrt(-u)). Both are entire in
// u, so a short Maclaurin series near 0 avoids the 0/0 cancellation at a
// degenerate (double) root without any branch switching.
const SERIES_CUTOFF: f64 = 0.5;

/// sinh(sqrt(u))/sqrt(u) for u >= 0, sin(sqrt(-u))/sqrt(-u) for u < 0.
pub fn sinhc_sqrt(u: f64) -> f64 {
    if u.abs() <= SERIES_CUTOFF {
        // sum u^k / (2k+1)!
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..=10u32 {
            let d = (2 * k) * (2 * k + 1);
            term *= u / d as f64;
            acc += term;
        }
        acc
    } else if u > 0.0 {
        let s = u.sqrt();
        s.sinh() / s
    } else {
        let s = (-u).sqrt();
        s.sin() / s
    }
}

/// cosh(sqrt(u)) for u >= 0, cos(sqrt(-u)) for u < 0.
pub fn cosh_sqrt(u: f64) -> f64 {
    if u.abs() <= SERIES_CUTOFF {
        // sum u^k / (2k)!
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..=10u32 {
            let d = (2 * k - 1) * (2 * k);
            term *= u / d as f64;
            acc += term;
        }
        acc
    } else if u > 0.0 {
        u.sqrt().cosh()
    } else {
        (-u).sqrt().cos()
    }
}
