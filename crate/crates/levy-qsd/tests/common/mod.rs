//! Canonical test instances shared by the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use levy_qsd::{compute_spectral, JumpAtom, LevyModel, SpectralData};

pub fn bm_model() -> LevyModel {
    LevyModel::BmDrift { mu: 1.0, sigma: 1.0 }
}

pub fn cp_model() -> LevyModel {
    LevyModel::CpExpDrift { mu: 2.0, c: 1.0, rho: 1.0 }
}

/// Two-atom meromorphic instance with a Gaussian part; lambda0 ~ 1.62.
pub fn mero_model() -> LevyModel {
    LevyModel::Meromorphic {
        a: -1.5,
        sigma: 0.5,
        atoms: vec![
            JumpAtom { weight: 1.0, rate: 2.0 },
            JumpAtom { weight: 1.0, rate: 4.0 },
        ],
    }
}

/// Finite-variation meromorphic instance (sigma = 0).
pub fn mero_fv_model() -> LevyModel {
    LevyModel::Meromorphic {
        a: -2.0,
        sigma: 0.0,
        atoms: vec![
            JumpAtom { weight: 1.0, rate: 1.0 },
            JumpAtom { weight: 2.0, rate: 3.0 },
        ],
    }
}

/// Compound Poisson instance whose oscillation past the critical rate is
/// visible well inside [0, 50] (first sign change of W^(-1.05 lambda0)
/// near x = 9.5).
pub fn cp_scan_model() -> LevyModel {
    LevyModel::CpExpDrift { mu: 1.0, c: 1.0, rho: 4.0 }
}

pub fn spectral(model: &LevyModel) -> SpectralData {
    compute_spectral(model).expect("valid test model")
}

/// The three canonical families used across the verification suites.
pub fn families() -> Vec<(&'static str, SpectralData)> {
    vec![
        ("bm-drift", spectral(&bm_model())),
        ("cp-exp-drift", spectral(&cp_model())),
        ("meromorphic", spectral(&mero_model())),
    ]
}

/// One verification line in the format used by every verify surface.
pub fn report(name: &str, target: f64, achieved: f64, tol: f64, pass: bool) {
    println!(
        "  check {name}: target {target:.6e} achieved {achieved:.6e} tol {tol:.1e} {}",
        if pass { "pass" } else { "FAIL" }
    );
}
