//! Cross-module analytic identities: scale-function bounds, ratio limits,
//! the renewal identity, the Esscher scale identity, and tilted-scale
//! integrals.

mod common;

use common::*;
use levy_qsd::numerics::trapezoid;
use levy_qsd::scale::{
    scale_closed_form, scale_grid_closed, scale_tail, w_phi, GridSpec, ScaleClosedForm,
};

/// Trapezoid convolution (f * g)(x_i) on a shared uniform grid; test-side
/// oracle, independent of the library's convolution.
fn convolve(f: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let mut acc = 0.5 * (f[0] * g[i] + f[i] * g[0]);
        for j in 1..i {
            acc += f[j] * g[i - j];
        }
        out[i] = h * acc;
    }
    out
}

#[test]
fn scale_values_respect_series_bound() {
    // |W^(q)(x)| <= W(x) exp(|q| int_0^x W)
    let grid = GridSpec::new(1e-3, 5.0);
    for (name, s) in families() {
        let base = scale_grid_closed(&s, 0.0, &grid).unwrap();
        let mut running = 0.0;
        let mut int_w = vec![0.0];
        for w in base.values.windows(2) {
            running += 0.5 * grid.h * (w[0] + w[1]);
            int_w.push(running);
        }
        for q in [-s.lambda0(), -0.5 * s.lambda0(), 1.0] {
            let wq = scale_grid_closed(&s, q, &grid).unwrap();
            for (i, (w, b)) in wq.values.iter().zip(&base.values).enumerate() {
                let bound = b * (q.abs() * int_w[i]).exp();
                assert!(
                    w.abs() <= bound + 1e-12,
                    "{name} q={q} x={}: |{w}| > {bound}",
                    wq.x(i)
                );
            }
        }
    }
}

#[test]
fn scale_is_strictly_increasing_for_nonnegative_q() {
    let grid = GridSpec::new(1e-3, 5.0);
    for (name, s) in families() {
        for q in [0.0, 1.0] {
            let wq = scale_grid_closed(&s, q, &grid).unwrap();
            for w in wq.values.windows(2) {
                assert!(w[1] > w[0], "{name} q={q}: not strictly increasing");
            }
        }
    }
}

#[test]
fn ratio_limit_gives_exit_transform() {
    // W^(q)(a-x)/W^(q)(a) -> e^{-x Phi(q)} as a -> inf.
    let a = 40.0;
    for (name, s) in families() {
        for q in [0.0, 1.0] {
            let cf = ScaleClosedForm::build(&s, q).unwrap();
            for x in [1.0, 2.0] {
                let ratio = cf.eval(a - x) / cf.eval(a);
                let target = (-x * s.phi(q)).exp();
                assert!(
                    (ratio - target).abs() <= 1e-4,
                    "{name} q={q} x={x}: {ratio} vs {target}"
                );
            }
        }
    }
}

#[test]
fn renewal_identity_at_zero_base() {
    // W^(-lambda)(x) = W(x) - lambda int_0^x W(x-y) W^(-lambda)(y) dy
    let grid = GridSpec::new(1e-3, 5.0);
    for (name, s) in families() {
        let lambda = 0.5 * s.lambda0();
        let base = scale_grid_closed(&s, 0.0, &grid).unwrap();
        let wl = scale_grid_closed(&s, -lambda, &grid).unwrap();
        let conv = convolve(&base.values, &wl.values, grid.h);
        let residual = (0..base.values.len())
            .map(|i| (wl.values[i] - (base.values[i] - lambda * conv[i])).abs())
            .fold(0.0f64, f64::max);
        assert!(residual <= 1e-6, "{name}: renewal identity residual {residual:e}");
    }
}

#[test]
fn esscher_scale_identity() {
    // W^(psi(-theta))(x) = e^{-theta x} W_theta(x), with W_theta the
    // 0-scale function of the tilted model.
    for (name, s) in [("bm-drift", spectral(&bm_model())), ("cp-exp-drift", spectral(&cp_model()))]
    {
        for frac in [0.3, 0.7] {
            let theta = frac * s.theta0();
            let q = s.psi(-theta);
            let tilted = spectral(&s.model().esscher(theta).unwrap());
            for i in 0..=50 {
                let x = 0.1 * i as f64;
                let lhs = scale_closed_form(&s, q, x).unwrap();
                let rhs = (-theta * x).exp() * scale_closed_form(&tilted, 0.0, x).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0),
                    "{name} theta={theta} x={x}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

#[test]
fn tilted_scale_integral_identity() {
    // int_0^inf e^{-Phi(-r) x} W^(-lambda)(x) dx = 1/(lambda - r), r < lambda.
    let grid = GridSpec::new(1e-3, 50.0);
    for (name, s) in families() {
        for lfrac in [0.5, 1.0] {
            let lambda = lfrac * s.lambda0();
            let wl = scale_grid_closed(&s, -lambda, &grid).unwrap();
            let tail = scale_tail(&s, -lambda).unwrap();
            for rfrac in [0.0, 0.5] {
                let r = rfrac * lambda;
                let damp = s.phi_extended(-r).unwrap();
                let damped: Vec<f64> = (0..wl.values.len())
                    .map(|i| (-damp * wl.x(i)).exp() * wl.values[i])
                    .collect();
                let integral =
                    trapezoid(&damped, grid.h) + tail.integral_beyond(wl.x_max(), damp);
                let target = 1.0 / (lambda - r);
                assert!(
                    (integral - target).abs() <= 1e-5 * target.max(1.0),
                    "{name} lambda={lambda} r={r}: {integral} vs {target}"
                );
            }
        }
    }
}

#[test]
fn tilted_scale_function_is_monotone() {
    let grid = GridSpec::new(1e-2, 50.0);
    for (name, s) in families() {
        for lfrac in [0.5, 1.0] {
            let lambda = lfrac * s.lambda0();
            let phi = s.phi_extended(-lambda).unwrap();
            let wl = scale_grid_closed(&s, -lambda, &grid).unwrap();
            let tilted: Vec<f64> = (0..wl.values.len())
                .map(|i| (-phi * wl.x(i)).exp() * wl.values[i])
                .collect();
            for w in tilted.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-12,
                    "{name} lambda={lambda}: tilted scale function decreased"
                );
            }
        }
    }
}

#[test]
fn w_phi_limit_matches_phi_prime() {
    for (name, s) in families() {
        let lambda = 0.5 * s.lambda0();
        let target = s.phi_prime(-lambda).unwrap();
        let v = w_phi(&s, lambda, 50.0).unwrap();
        assert!((v - target).abs() <= 1e-4, "{name}: {v} vs {target}");
    }
}

#[test]
fn positivity_sign_flips_just_past_critical_rate() {
    // min W^(-lambda) >= 0 at lambda0 (1 - 1e-3) and < 0 at
    // lambda0 (1 + 0.05). The scan window adapts to the oscillation
    // frequency of the super-critical branch so the first sign change is
    // always inside it.
    let instances = vec![
        ("bm-drift", spectral(&bm_model())),
        ("cp-exp-drift", spectral(&cp_model())),
        ("meromorphic", spectral(&mero_model())),
        ("meromorphic-fv", spectral(&mero_fv_model())),
    ];
    for (name, s) in instances {
        let l0 = s.lambda0();
        let below = levy_qsd::qsd::lambda_scan(
            &s,
            &[l0 * (1.0 - 1e-3)],
            &GridSpec::new(1e-3, 50.0),
        )
        .unwrap()[0]
            .min_w;
        assert!(below >= 0.0, "{name}: min {below} below critical rate");

        let pp = s.model().psi_deriv(-s.theta0(), 2).unwrap();
        let v = (0.1 * l0 / pp).sqrt();
        let x_scan = 50.0f64.max(1.25 * std::f64::consts::PI / v);
        let h = 1e-3f64.max(x_scan / 100_000.0);
        let above = levy_qsd::qsd::lambda_scan(
            &s,
            &[l0 * 1.05],
            &GridSpec::new(h, x_scan),
        )
        .unwrap()[0]
            .min_w;
        assert!(above < 0.0, "{name}: min {above} past critical rate");
    }
}

#[test]
fn potential_density_nonnegative_on_grid() {
    for (_, s) in families() {
        for q in [0.0, 0.7] {
            for &x in &[0.0, 0.5, 1.5, 4.0] {
                for &y in &[0.0, 0.3, 1.5, 6.0] {
                    let u = levy_qsd::scale::potential_density(&s, q, x, y).unwrap();
                    assert!(u >= -1e-12, "u^{q}({x},{y}) = {u}");
                }
            }
        }
    }
}
