//! Quasi-stationary distributions `nu_lambda(dx) = lambda W^(-lambda)(x) dx`
//! for `0 < lambda <= lambda0`.
//!
//! The density table is built from the closed-form scale function and its
//! total mass is *checked* against 1, never rescaled: the normalization
//! identity `1 = lambda int_0^inf W^(-lambda)` is one of the facts this
//! crate verifies, and silently imposing it would mask scale-function bugs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numerics::cumulative_trapezoid;
use crate::scale::{scale_grid_closed, scale_tail, ExpTail, GridSpec, ScaleError, ScaleGrid};
use crate::spectral::{SpectralData, SpectralError};

/// Tolerance on `|mass - 1|` accepted by [`build_qsd`].
pub const MASS_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum QsdError {
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("no quasi-stationary distribution exists (lambda0 = 0)")]
    NoQsd,
    #[error("lambda = {lambda} outside the admissible interval (0, lambda0 = {lambda0}]")]
    LambdaOutOfRange { lambda: f64, lambda0: f64 },
    #[error("density mass {mass} deviates from 1 beyond tolerance {tol:e}")]
    MassDeviation { mass: f64, tol: f64 },
    #[error("order check requires 0 < lambda <= lambda' <= lambda0, got ({lambda}, {lambda_prime})")]
    BadPair { lambda: f64, lambda_prime: f64 },
}

/// Tabulated quasi-stationary density `lambda W^(-lambda)` with an analytic
/// exponential tail beyond the grid.
#[derive(Debug, Clone)]
pub struct QsdDensity {
    lambda: f64,
    grid: ScaleGrid,
    /// Cumulative trapezoid table of the density over the grid.
    cdf: Vec<f64>,
    /// Tail of the *density* (the factor `lambda` folded in).
    tail: ExpTail,
    mass: f64,
}

/// Builds `nu_lambda` on the given grid. The mass check is strict: a table
/// whose total deviates from 1 by more than [`MASS_TOL`] is an error.
pub fn build_qsd(
    spectral: &SpectralData,
    lambda: f64,
    grid: &GridSpec,
) -> Result<QsdDensity, QsdError> {
    let lambda0 = spectral.lambda0();
    if lambda0 <= 0.0 {
        return Err(QsdError::NoQsd);
    }
    if !(lambda > 0.0 && lambda <= lambda0 * (1.0 + 1e-9)) {
        return Err(QsdError::LambdaOutOfRange { lambda, lambda0 });
    }
    let sg = scale_grid_closed(spectral, -lambda, grid)?;
    let density: Vec<f64> = sg.values.iter().map(|w| lambda * w).collect();
    let cdf = cumulative_trapezoid(&density, sg.h);
    let raw_tail = scale_tail(spectral, -lambda)?;
    let tail = ExpTail {
        cst: lambda * raw_tail.cst,
        lin: lambda * raw_tail.lin,
        rate: raw_tail.rate,
    };
    let mass = cdf.last().copied().unwrap_or(0.0) + tail.integral_beyond(sg.x_max(), 0.0);
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(QsdError::MassDeviation { mass, tol: MASS_TOL });
    }
    Ok(QsdDensity { lambda, grid: sg, cdf, tail, mass })
}

impl QsdDensity {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Total mass of the table plus tail (within [`MASS_TOL`] of 1).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max()
    }

    /// Density `lambda W^(-lambda)(x)`, using the analytic tail beyond the
    /// grid.
    pub fn density_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self.grid.value_at(x) {
            Some(w) => self.lambda * w,
            None => self.tail.eval(x),
        }
    }

    /// Normalized CDF (reaches exactly 1 at infinity).
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let x_max = self.grid.x_max();
        let raw = if x <= x_max {
            let pos = x / self.grid.h;
            let i = (pos.floor() as usize).min(self.cdf.len() - 1);
            if i + 1 >= self.cdf.len() {
                self.cdf[i]
            } else {
                let frac = pos - i as f64;
                self.cdf[i] * (1.0 - frac) + self.cdf[i + 1] * frac
            }
        } else {
            self.cdf[self.cdf.len() - 1] + self.tail.integral_beyond(x_max, 0.0)
                - self.tail.integral_beyond(x, 0.0)
        };
        (raw / self.mass).clamp(0.0, 1.0)
    }

    /// Inverse-CDF sampling: table inversion with linear interpolation, and
    /// exact mixture sampling (shifted exponential plus shifted Gamma(2))
    /// on the analytic tail. Deterministic given the seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with_rng(n, &mut rng)
    }

    /// Sampling against a caller-owned RNG stream; parallel callers should
    /// hand each worker its own stream.
    pub fn sample_with_rng<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let grid_mass = *self.cdf.last().expect("nonempty cdf");
        (0..n)
            .map(|_| {
                let target = rng.gen::<f64>() * self.mass;
                if target <= grid_mass {
                    self.invert_table(target)
                } else {
                    self.sample_tail(rng)
                }
            })
            .collect()
    }

    fn invert_table(&self, target: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c < target);
        if i == 0 {
            return 0.0;
        }
        let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
        ((i - 1) as f64 + frac) * self.grid.h
    }

    fn sample_tail<R: Rng>(&self, rng: &mut R) -> f64 {
        let x_max = self.grid.x_max();
        let omega = -self.tail.rate;
        // density beyond x_max, shifted by y = x - x_max:
        //   (A + B y) e^{-omega y},  A = cst + lin x_max, B = lin
        let a = self.tail.cst + self.tail.lin * x_max;
        let b = self.tail.lin;
        let w_exp = a / omega;
        let w_gamma = b / (omega * omega);
        let p_gamma = if w_exp + w_gamma > 0.0 { w_gamma / (w_exp + w_gamma) } else { 0.0 };
        let y = if rng.gen::<f64>() < p_gamma {
            (-(1.0 - rng.gen::<f64>()).ln() - (1.0 - rng.gen::<f64>()).ln()) / omega
        } else {
            -(1.0 - rng.gen::<f64>()).ln() / omega
        };
        x_max + y
    }
}

/// Laplace transform of `nu_lambda`: `lambda / (psi(beta) + lambda)`.
pub fn qsd_laplace(spectral: &SpectralData, lambda: f64, beta: f64) -> f64 {
    assert!(beta >= 0.0, "qsd_laplace needs beta >= 0");
    assert!(lambda > 0.0, "qsd_laplace needs lambda > 0");
    lambda / (spectral.psi(beta) + lambda)
}

/// Result of the stochastic-order check between `nu_lambda` and
/// `nu_lambda'`.
#[derive(Debug, Clone, Copy)]
pub struct OrderVerdict {
    pub pass: bool,
    /// Largest increase of either ratio function between consecutive grid
    /// points (negative/zero when the monotonicity holds).
    pub max_increment: f64,
}

const ORDER_SLACK: f64 = 1e-12;

/// Verifies that the Laplace-transform ratio
/// `(lambda/lambda') (psi + lambda') / (psi + lambda)` and the reversed
/// ratio `(psi + lambda') / (psi + lambda)` are non-increasing on the given
/// `beta` grid, which orders `nu_lambda'` below `nu_lambda` in both
/// associated stochastic orders.
pub fn order_check(
    spectral: &SpectralData,
    lambda: f64,
    lambda_prime: f64,
    beta_grid: &[f64],
) -> Result<OrderVerdict, QsdError> {
    let lambda0 = spectral.lambda0();
    if !(lambda > 0.0
        && lambda <= lambda_prime
        && lambda_prime <= lambda0 * (1.0 + 1e-9))
    {
        return Err(QsdError::BadPair { lambda, lambda_prime });
    }
    let reversed_ratio =
        |beta: f64| (spectral.psi(beta) + lambda_prime) / (spectral.psi(beta) + lambda);
    let scale = lambda / lambda_prime;
    let mut max_increment = f64::NEG_INFINITY;
    if beta_grid.len() < 2 {
        return Ok(OrderVerdict { pass: true, max_increment: 0.0 });
    }
    for pair in beta_grid.windows(2) {
        let (b0, b1) = (pair[0], pair[1]);
        let r0 = reversed_ratio(b0);
        let r1 = reversed_ratio(b1);
        max_increment = max_increment.max(r1 - r0).max(scale * (r1 - r0));
    }
    Ok(OrderVerdict { pass: max_increment <= ORDER_SLACK, max_increment })
}

/// One row of [`lambda_scan`].
#[derive(Debug, Clone, Copy)]
pub struct LambdaScanRow {
    pub lambda: f64,
    /// Grid minimum of `W^(-lambda)` on `[0, x_max]`.
    pub min_w: f64,
    /// `lambda` times the integral of `W^(-lambda)` (grid plus analytic
    /// tail where one exists; grid only past the critical value).
    pub mass: f64,
    /// Whether the analytic tail was available and included in `mass`.
    pub tail_included: bool,
}

/// Scans candidate decay rates and reports, per `lambda`, the minimum of
/// `W^(-lambda)` and its normalized mass. Locates the positivity threshold
/// empirically: the minimum stays nonnegative up to `lambda0` and dips
/// negative beyond it.
pub fn lambda_scan(
    spectral: &SpectralData,
    lambdas: &[f64],
    grid: &GridSpec,
) -> Result<Vec<LambdaScanRow>, QsdError> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(QsdError::LambdaOutOfRange { lambda, lambda0: spectral.lambda0() });
        }
        let sg = scale_grid_closed(spectral, -lambda, grid)?;
        let min_w = sg.values.iter().copied().fold(f64::INFINITY, f64::min);
        let body = crate::numerics::trapezoid(&sg.values, sg.h);
        // The tail contributes only when it decays: past the critical value
        // it oscillates, and without a QSD it grows (infinite mass).
        let (tail_mass, tail_included) = match scale_tail(spectral, -lambda) {
            Ok(tail) if tail.rate < 0.0 => (tail.integral_beyond(sg.x_max(), 0.0), true),
            Ok(_) => (0.0, false),
            Err(ScaleError::NoAnalyticTail { .. }) => (0.0, false),
            Err(e) => return Err(e.into()),
        };
        rows.push(LambdaScanRow {
            lambda,
            min_w,
            mass: lambda * (body + tail_mass),
            tail_included,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevyModel;
    use crate::numerics::{bisect, trapezoid};
    use crate::spectral::compute_spectral;

    fn bm() -> SpectralData {
        compute_spectral(&LevyModel::BmDrift { mu: 1.0, sigma: 1.0 }).unwrap()
    }

    fn cp() -> SpectralData {
        compute_spectral(&LevyModel::CpExpDrift { mu: 2.0, c: 1.0, rho: 1.0 }).unwrap()
    }

    fn default_grid() -> GridSpec {
        GridSpec::new(1e-3, 50.0)
    }

    #[test]
    fn critical_density_is_gamma_2_1_for_unit_bm() {
        let q = build_qsd(&bm(), 0.5, &default_grid()).unwrap();
        assert!((q.mass() - 1.0).abs() <= MASS_TOL);
        for &x in &[0.1f64, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let expected = x * (-x).exp();
            assert!(
                (q.density_at(x) - expected).abs() < 1e-10,
                "density at {x}: {} vs {expected}",
                q.density_at(x)
            );
        }
        // Gamma(2,1) CDF: 1 - (1+x) e^{-x}
        for &x in &[0.5f64, 1.5, 3.0] {
            let expected = 1.0 - (1.0 + x) * (-x).exp();
            assert!((q.cdf_at(x) - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn interior_lambda_density_matches_hand_formula() {
        // lambda = 0.375: W^(-0.375)(x) = 4 e^{-x} sinh(x/2) for unit BM.
        let q = build_qsd(&bm(), 0.375, &default_grid()).unwrap();
        for &x in &[0.2f64, 1.0, 2.5] {
            let expected = 0.375 * 4.0 * (-x).exp() * (0.5 * x).sinh();
            assert!((q.density_at(x) - expected).abs() < 1e-10);
        }
        assert!((q.mass() - 1.0).abs() <= MASS_TOL);
    }

    #[test]
    fn rejects_lambda_outside_interval() {
        let s = bm();
        let g = default_grid();
        assert!(matches!(
            build_qsd(&s, 0.6, &g),
            Err(QsdError::LambdaOutOfRange { .. })
        ));
        assert!(matches!(
            build_qsd(&s, 1.2 * 0.5, &g),
            Err(QsdError::LambdaOutOfRange { .. })
        ));
        assert!(build_qsd(&s, -0.1, &g).is_err());
        let no_qsd = compute_spectral(&LevyModel::CpExpDrift { mu: 1.0, c: 1.0, rho: 1.0 })
            .unwrap();
        assert!(matches!(build_qsd(&no_qsd, 0.1, &g), Err(QsdError::NoQsd)));
    }

    #[test]
    fn laplace_transform_examples() {
        let s = bm();
        assert_eq!(qsd_laplace(&s, 0.5, 0.0), 1.0);
        // psi(1) = 1.5 for unit BM: 0.5/(1.5+0.5) = 0.25
        assert!((qsd_laplace(&s, 0.5, 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn laplace_transform_matches_quadrature() {
        for s in [bm(), cp()] {
            let lambda = 0.5 * s.lambda0();
            let q = build_qsd(&s, lambda, &default_grid()).unwrap();
            for &beta in &[0.5, 1.0, 2.0, 5.0] {
                let damped: Vec<f64> = (0..q.grid().values.len())
                    .map(|i| {
                        let x = q.grid().x(i);
                        (-beta * x).exp() * q.density_at(x)
                    })
                    .collect();
                let quad = trapezoid(&damped, q.grid().h)
                    + q.tail.integral_beyond(q.x_max(), beta);
                let exact = qsd_laplace(&s, lambda, beta);
                assert!(
                    (quad - exact).abs() < 1e-5,
                    "beta {beta}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn sampler_moments_match_gamma_2_1() {
        let q = build_qsd(&bm(), 0.5, &default_grid()).unwrap();
        let n = 100_000;
        let xs = q.sample(n, 0xC0FFEE);
        assert_eq!(xs.len(), n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        // Gamma(2,1): mean 2, sd sqrt(2); 3 sigma band on the sample mean.
        let band = 3.0 * (2.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 2.0).abs() < band, "mean {mean} outside {band}");

        // Median oracle: root of 1 - (1+m) e^{-m} = 1/2.
        let median = bisect(|m| 1.0 - (1.0 + m) * (-m).exp() - 0.5, 0.1, 5.0, 1e-12).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let sample_median = sorted[n / 2];
        // asymptotic se of the sample median: 1/(2 f(m) sqrt(n))
        let f_med = median * (-median).exp();
        let band = 3.0 / (2.0 * f_med * (n as f64).sqrt());
        assert!(
            (sample_median - median).abs() < band,
            "median {sample_median} vs {median} (band {band})"
        );
    }

    #[test]
    fn sampler_is_deterministic_and_handles_zero() {
        let q = build_qsd(&bm(), 0.25, &default_grid()).unwrap();
        assert!(q.sample(0, 7).is_empty());
        let a = q.sample(1000, 42);
        let b = q.sample(1000, 42);
        assert_eq!(a, b);
        let c = q.sample(1000, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn order_check_verdicts() {
        let s = bm();
        let grid: Vec<f64> = (0..100).map(|i| 10.0 * i as f64 / 99.0).collect();
        let v = order_check(&s, 0.1, 0.5, &grid).unwrap();
        assert!(v.pass, "max increment {}", v.max_increment);
        // Equal rates: both ratios constant; trivially non-increasing.
        let v = order_check(&s, 0.3, 0.3, &grid).unwrap();
        assert!(v.pass);
        // Single point: vacuous.
        let v = order_check(&s, 0.1, 0.5, &[1.0]).unwrap();
        assert!(v.pass);
        assert!(order_check(&s, 0.5, 0.1, &grid).is_err());
        assert!(order_check(&s, 0.1, 0.7, &grid).is_err());
    }

    #[test]
    fn lambda_scan_works_without_qsd() {
        // Upward-drifting model (psi'(0) < 0): no QSD, but the scale
        // functions still have a positivity threshold at -min(psi), where
        // the two leading roots of psi = -lambda collide. Below it
        // W^(-lambda) grows positively (non-integrable: the tail is
        // excluded from the reported mass); above it the complex pair makes
        // the sign flip.
        let s = compute_spectral(&LevyModel::CpExpDrift { mu: 1.0, c: 2.0, rho: 1.0 })
            .unwrap();
        assert_eq!(s.lambda0(), 0.0);
        let collision = (2.0f64.sqrt() - 1.0).powi(2);
        let rows = lambda_scan(
            &s,
            &[0.5 * collision, 1.05 * collision],
            &default_grid(),
        )
        .unwrap();
        assert!(rows[0].min_w >= 0.0);
        assert!(!rows[0].tail_included);
        assert!(rows[1].min_w < 0.0);
    }

    #[test]
    fn lambda_scan_locates_positivity_threshold() {
        let s = bm();
        let lambda0 = s.lambda0();
        let rows = lambda_scan(
            &s,
            &[0.8 * lambda0, lambda0, 1.2 * lambda0],
            &default_grid(),
        )
        .unwrap();
        assert!(rows[0].min_w >= 0.0);
        assert!(rows[1].min_w >= -1e-10);
        assert!(rows[2].min_w < 0.0);
        // Mass is 1 on the admissible range.
        assert!((rows[0].mass - 1.0).abs() < 1e-5);
        assert!((rows[1].mass - 1.0).abs() < 1e-5);
        assert!(rows[0].tail_included && rows[1].tail_included);
        assert!(!rows[2].tail_included);
        assert!(lambda_scan(&s, &[], &default_grid()).unwrap().is_empty());
    }
}
