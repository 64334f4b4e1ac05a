//! Task dispatch: each task reads the validated model, writes
//! `<prefix>-summary.csv` plus task-specific CSV tables, and returns a
//! process status. Verification tasks print one line per check and fail
//! with a dedicated status when any tolerance is missed.

use std::fmt;

use levy_qsd::montecarlo::{
    conditional_law, estimate_exit_laplace, estimate_survival, exit_times, SimConfig,
};
use levy_qsd::numerics::{linspace, trapezoid};
use levy_qsd::qsd::{build_qsd, lambda_scan, order_check, qsd_laplace, MASS_TOL};
use levy_qsd::scale::{
    laplace_residual, scale_grid_closed, scale_renewal, scale_series, scale_tail, GridSpec,
    ScaleGrid, ScaleMethod,
};
use levy_qsd::{compute_spectral, LevyModel, SpectralData};

use crate::config::{RunConfig, Task};
use crate::csvout::{fmt_f, CsvFile, Summary};

#[derive(Debug)]
pub enum CliError {
    /// Config file unreadable or not parseable (status 2).
    Parse(String),
    /// Model or task-parameter validation failure (status 3).
    Validation(String),
    /// One or more verification checks missed tolerance (status 4).
    Tolerance { failed: usize },
    /// I/O failure writing outputs (status 1).
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Tolerance { failed } => {
                write!(f, "verification failed: {failed} check(s) missed tolerance")
            }
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Tolerance { .. } => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn validation<E: fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub seed: Option<u64>,
}

fn grid_from(h: Option<f64>, x_max: Option<f64>, defaults: (f64, f64)) -> Result<GridSpec, CliError> {
    let h = h.unwrap_or(defaults.0);
    let x_max = x_max.unwrap_or(defaults.1);
    if !(h > 0.0 && x_max >= h && x_max / h <= 5e7) {
        return Err(CliError::Validation(format!(
            "invalid grid: h = {h}, x_max = {x_max}"
        )));
    }
    Ok(GridSpec::new(h, x_max))
}

/// Accumulates verification rows, printing each as it lands.
struct Checker {
    file: CsvFile,
    failed: usize,
    total: usize,
}

impl Checker {
    fn new(prefix: &str, name: &str) -> Checker {
        Checker {
            file: CsvFile::new(prefix, name, "check,target,achieved,tolerance,pass"),
            failed: 0,
            total: 0,
        }
    }

    fn check(&mut self, name: &str, target: f64, achieved: f64, tol: f64, pass: bool) {
        println!(
            "check {name}: target {} achieved {} tolerance {} {}",
            fmt_f(target),
            fmt_f(achieved),
            fmt_f(tol),
            if pass { "pass" } else { "FAIL" }
        );
        self.file.row(&[
            name.to_string(),
            fmt_f(target),
            fmt_f(achieved),
            fmt_f(tol),
            pass.to_string(),
        ]);
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
    }

    fn finish(self, summary: &mut Summary) -> Result<usize, CliError> {
        summary.int("checks_total", self.total as u64);
        summary.int("checks_failed", self.failed as u64);
        self.file.write()?;
        Ok(self.failed)
    }
}

pub fn run(cfg: &RunConfig, overrides: &Overrides) -> Result<(), CliError> {
    let task = cfg.task().map_err(CliError::Parse)?;
    let model = cfg.model.to_model();
    let spectral = compute_spectral(&model).map_err(validation)?;
    let prefix = overrides
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| "levy-qsd-out".to_string());

    let mut summary = Summary::new(&prefix);
    summary.text("task", task.name());
    describe_model(&mut summary, cfg, &spectral);

    let failed = match task {
        Task::Describe => 0,
        Task::Spectral => {
            task_spectral(cfg, &prefix, &spectral, &mut summary)?;
            0
        }
        Task::Scale => {
            task_scale(cfg, &prefix, &spectral, &mut summary)?;
            0
        }
        Task::Qsd => {
            task_qsd(cfg, &prefix, &spectral, &mut summary)?;
            0
        }
        Task::VerifyAnalytic => task_verify_analytic(cfg, &prefix, &spectral, &mut summary)?,
        Task::VerifyMc => task_verify_mc(cfg, overrides, &prefix, &spectral, &mut summary)?,
    };

    summary.write()?;
    if failed > 0 {
        return Err(CliError::Tolerance { failed });
    }
    Ok(())
}

fn describe_model(summary: &mut Summary, cfg: &RunConfig, spectral: &SpectralData) {
    summary.text("family", cfg.model.family_name());
    match spectral.model() {
        LevyModel::BmDrift { mu, sigma } => {
            summary.float("mu", *mu);
            summary.float("sigma", *sigma);
        }
        LevyModel::CpExpDrift { mu, c, rho } => {
            summary.float("mu", *mu);
            summary.float("c", *c);
            summary.float("rho", *rho);
        }
        LevyModel::Meromorphic { a, sigma, atoms } => {
            summary.float("a", *a);
            summary.float("sigma", *sigma);
            summary.int("n_atoms", atoms.len() as u64);
            for (i, at) in atoms.iter().enumerate() {
                summary.float(&format!("atom{}_weight", i + 1), at.weight);
                summary.float(&format!("atom{}_rate", i + 1), at.rate);
            }
        }
    }
    let report = spectral.model().validate().expect("validated earlier");
    summary.text("condition", &report.condition.to_string());
    summary.float("psi_prime_zero", report.psi_prime_zero);
    summary.float("exp_moment_boundary", report.exp_moment_boundary);
    summary.bool("qsd_exists", report.qsd_exists);
    summary.float("theta0", spectral.theta0());
    summary.float("lambda0", spectral.lambda0());
}

fn task_spectral(
    cfg: &RunConfig,
    prefix: &str,
    spectral: &SpectralData,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let q_max = cfg.q_max.unwrap_or(10.0);
    let n_q = cfg.n_q.unwrap_or(200).max(2);
    let q_lo = if spectral.lambda0() > 0.0 { -0.99 * spectral.lambda0() } else { 0.0 };
    if q_max <= q_lo {
        return Err(CliError::Validation(format!(
            "q_max = {q_max} must exceed the lower endpoint {q_lo}"
        )));
    }
    let mut file = CsvFile::new(prefix, "spectral", "q,phi,phi_prime");
    for q in linspace(q_lo, q_max, n_q) {
        let phi = spectral.phi_extended(q).map_err(validation)?;
        let dphi = spectral.phi_prime(q).map_err(validation)?;
        file.row(&[fmt_f(q), fmt_f(phi), fmt_f(dphi)]);
    }
    file.write()?;
    summary.float("q_lo", q_lo);
    summary.float("q_max", q_max);
    summary.int("n_q", n_q as u64);
    Ok(())
}

fn task_scale(
    cfg: &RunConfig,
    prefix: &str,
    spectral: &SpectralData,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let q = cfg.q.unwrap_or(0.0);
    let method = match cfg.method.as_deref().unwrap_or("closed-form") {
        "closed-form" => ScaleMethod::ClosedForm,
        "series" => ScaleMethod::Series,
        "renewal" => ScaleMethod::Renewal,
        other => {
            return Err(CliError::Validation(format!(
                "unknown scale method '{other}' (closed-form|series|renewal)"
            )))
        }
    };
    // The quadratic-cost methods default to a short window.
    let default_x_max = match method {
        ScaleMethod::ClosedForm => 50.0,
        _ => 5.0,
    };
    let grid = grid_from(cfg.h, cfg.x_max, (1e-3, default_x_max))?;
    let (h, x_max) = (grid.h, grid.x_max);
    let sg: ScaleGrid = match method {
        ScaleMethod::ClosedForm => scale_grid_closed(spectral, q, &grid),
        ScaleMethod::Series => scale_series(spectral, q, &grid),
        ScaleMethod::Renewal => scale_renewal(spectral, q, cfg.r.unwrap_or(0.0), &grid),
    }
    .map_err(validation)?;
    let mut file = CsvFile::new(prefix, "scale", "x,w");
    for (i, w) in sg.values.iter().enumerate() {
        file.row(&[fmt_f(sg.x(i)), fmt_f(*w)]);
    }
    file.write()?;
    summary.float("q", q);
    summary.text(
        "method",
        match method {
            ScaleMethod::ClosedForm => "closed-form",
            ScaleMethod::Series => "series",
            ScaleMethod::Renewal => "renewal",
        },
    );
    summary.float("h", h);
    summary.float("x_max", x_max);
    summary.float("err_estimate", sg.err_estimate);
    Ok(())
}

fn task_qsd(
    cfg: &RunConfig,
    prefix: &str,
    spectral: &SpectralData,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let lambda = cfg
        .lambda
        .ok_or_else(|| CliError::Validation("qsd task requires `lambda`".to_string()))?;
    let grid = grid_from(cfg.h, cfg.x_max, (1e-3, 50.0))?;
    let qsd = build_qsd(spectral, lambda, &grid).map_err(validation)?;
    let mut file = CsvFile::new(prefix, "qsd", "x,density,cdf");
    let n = qsd.grid().values.len();
    for i in 0..n {
        let x = qsd.grid().x(i);
        file.row(&[fmt_f(x), fmt_f(qsd.density_at(x)), fmt_f(qsd.cdf_at(x))]);
    }
    file.write()?;
    summary.float("lambda", lambda);
    summary.float("mass", qsd.mass());
    summary.float("laplace_at_1", qsd_laplace(spectral, lambda, 1.0));
    Ok(())
}

fn task_verify_analytic(
    cfg: &RunConfig,
    prefix: &str,
    spectral: &SpectralData,
    summary: &mut Summary,
) -> Result<usize, CliError> {
    let base_grid = grid_from(cfg.h, cfg.x_max, (1e-3, 50.0))?;
    let (h, x_max) = (base_grid.h, base_grid.x_max);
    let mut checker = Checker::new(prefix, "verify-analytic");
    let l0 = spectral.lambda0();

    // Right-inverse round trip on the extended domain.
    {
        let q_lo = if l0 > 0.0 { -0.999 * l0 } else { 0.0 };
        let mut worst = 0.0f64;
        for q in linspace(q_lo, 10.0, 200) {
            let b = spectral.phi_extended(q).map_err(validation)?;
            worst = worst.max((spectral.psi(b) - q).abs() / q.abs().max(1.0));
        }
        checker.check("phi-roundtrip", 0.0, worst, 1e-10, worst <= 1e-10);
    }

    // Defining Laplace identity of the scale function.
    {
        let grid = GridSpec::new(2e-4, x_max);
        let mut worst = 0.0f64;
        for qf in [0.0, -0.25, -0.5] {
            let q = qf * l0;
            let sg = scale_grid_closed(spectral, q, &grid).map_err(validation)?;
            for margin in [0.35, 1.0] {
                let beta = spectral.phi(q.abs()) + margin;
                worst = worst.max(laplace_residual(spectral, &sg, beta).map_err(validation)?);
            }
        }
        for q in [0.5, 2.0] {
            let sg = scale_grid_closed(spectral, q, &grid).map_err(validation)?;
            for margin in [0.35, 1.0] {
                let beta = spectral.phi(q) + margin;
                worst = worst.max(laplace_residual(spectral, &sg, beta).map_err(validation)?);
            }
        }
        checker.check("laplace-residual", 0.0, worst, 1e-6, worst <= 1e-6);
    }

    if l0 > 0.0 {
        // lambda0 = -psi(-theta0).
        let resid = (l0 + spectral.psi(-spectral.theta0())).abs() / l0.max(1.0);
        checker.check("critical-rate-consistency", 0.0, resid, 1e-10, resid <= 1e-10);

        // Closed form vs series vs renewal.
        {
            let grid = GridSpec::new(h.max(1e-3), 5.0);
            let mut worst = 0.0f64;
            for qf in [0.0, -0.5, -1.0] {
                let q = qf * l0;
                let closed = scale_grid_closed(spectral, q, &grid).map_err(validation)?;
                let series = scale_series(spectral, q, &grid).map_err(validation)?;
                let renewal = scale_renewal(spectral, q, 0.0, &grid).map_err(validation)?;
                worst = worst
                    .max(closed.sup_distance(&series))
                    .max(closed.sup_distance(&renewal))
                    .max(series.sup_distance(&renewal));
            }
            checker.check("scale-triple-agreement", 0.0, worst, 1e-5, worst <= 1e-5);
        }

        // Normalization of the quasi-stationary densities.
        {
            let grid = GridSpec::new(h, x_max);
            let rows = lambda_scan(spectral, &[0.25 * l0, 0.5 * l0, l0], &grid)
                .map_err(validation)?;
            let worst = rows
                .iter()
                .map(|r| (r.mass - 1.0).abs())
                .fold(0.0f64, f64::max);
            checker.check("qsd-mass", 1.0, 1.0 + worst, MASS_TOL, worst <= MASS_TOL);
        }

        // Renewal identity at base rate zero.
        {
            let grid = GridSpec::new(h.max(1e-3), 5.0);
            let lambda = 0.5 * l0;
            let base = scale_grid_closed(spectral, 0.0, &grid).map_err(validation)?;
            let wl = scale_grid_closed(spectral, -lambda, &grid).map_err(validation)?;
            let n = base.values.len();
            let mut worst = (wl.values[0] - base.values[0]).abs();
            for i in 1..n {
                let mut conv = 0.5 * (base.values[0] * wl.values[i] + base.values[i] * wl.values[0]);
                for j in 1..i {
                    conv += base.values[j] * wl.values[i - j];
                }
                let rhs = base.values[i] - lambda * grid.h * conv;
                worst = worst.max((wl.values[i] - rhs).abs());
            }
            checker.check("renewal-identity", 0.0, worst, 1e-6, worst <= 1e-6);
        }

        // Positivity threshold straddles lambda0. The scan window for the
        // super-critical rate adapts to the local oscillation frequency so
        // the first sign change is always inside it.
        {
            let grid = GridSpec::new(h, x_max);
            let at = lambda_scan(spectral, &[l0], &grid).map_err(validation)?[0].min_w;
            checker.check("positivity-at-critical", 0.0, at, 1e-10, at >= -1e-10);

            let pp = spectral
                .model()
                .psi_deriv(-spectral.theta0(), 2)
                .map_err(validation)?;
            let v = (0.1 * l0 / pp).sqrt();
            let x_scan = x_max.max(1.25 * std::f64::consts::PI / v);
            let h_scan = h.max(x_scan / 100_000.0);
            let scan_grid = GridSpec::new(h_scan, x_scan);
            let beyond =
                lambda_scan(spectral, &[1.05 * l0], &scan_grid).map_err(validation)?[0].min_w;
            checker.check("negativity-beyond-critical", -1.0, beyond, 0.0, beyond < 0.0);
        }

        // Stochastic orders of the QSD family.
        {
            let betas = linspace(0.0, 10.0, 100);
            let ls = [0.25 * l0, 0.5 * l0, l0];
            let mut worst = f64::NEG_INFINITY;
            let mut pass = true;
            for i in 0..ls.len() {
                for j in (i + 1)..ls.len() {
                    let v = order_check(spectral, ls[i], ls[j], &betas).map_err(validation)?;
                    worst = worst.max(v.max_increment);
                    pass &= v.pass;
                }
            }
            checker.check("laplace-ratio-orders", 0.0, worst, 1e-12, pass);
        }

        // Tilted scale function: monotone, limit value, damped integrals.
        {
            let coarse = GridSpec::new(1e-2, x_max);
            let mut worst_inc = f64::NEG_INFINITY;
            for lf in [0.5, 1.0] {
                let lambda = lf * l0;
                let phi = spectral.phi_extended(-lambda).map_err(validation)?;
                let wl = scale_grid_closed(spectral, -lambda, &coarse).map_err(validation)?;
                let mut prev = f64::NEG_INFINITY;
                for i in 0..wl.values.len() {
                    let v = (-phi * wl.x(i)).exp() * wl.values[i];
                    if i > 0 {
                        worst_inc = worst_inc.max(prev - v);
                    }
                    prev = v;
                }
            }
            checker.check(
                "tilted-scale-monotone",
                0.0,
                worst_inc,
                1e-12,
                worst_inc <= 1e-12,
            );

            let lambda = 0.5 * l0;
            let target = spectral.phi_prime(-lambda).map_err(validation)?;
            let v = levy_qsd::scale::w_phi(spectral, lambda, 50.0).map_err(validation)?;
            checker.check("tilted-scale-limit", target, v, 1e-4, (v - target).abs() <= 1e-4);

            let fine = GridSpec::new(h, x_max);
            let mut worst = 0.0f64;
            for lf in [0.5, 1.0] {
                let lambda = lf * l0;
                let wl = scale_grid_closed(spectral, -lambda, &fine).map_err(validation)?;
                let tail = scale_tail(spectral, -lambda).map_err(validation)?;
                for rf in [0.0, 0.5] {
                    let r = rf * lambda;
                    let damp = spectral.phi_extended(-r).map_err(validation)?;
                    let damped: Vec<f64> = (0..wl.values.len())
                        .map(|i| (-damp * wl.x(i)).exp() * wl.values[i])
                        .collect();
                    let integral = trapezoid(&damped, fine.h)
                        + tail.integral_beyond(wl.x_max(), damp);
                    let target = 1.0 / (lambda - r);
                    worst = worst.max((integral - target).abs() / target.max(1.0));
                }
            }
            checker.check("damped-scale-integral", 0.0, worst, 1e-5, worst <= 1e-5);
        }
    } else {
        println!("note: lambda0 = 0, quasi-stationary checks skipped (no QSD exists)");
        summary.text("skipped", "qsd-checks-no-critical-rate");
    }

    checker.finish(summary)
}

fn sim_config(cfg: &RunConfig, overrides: &Overrides, spectral: &SpectralData) -> SimConfig {
    let mut sim = SimConfig::default_for(spectral);
    if let Some(dt) = cfg.dt {
        sim.dt = dt;
    }
    if let Some(hz) = cfg.horizon {
        sim.horizon = hz;
    }
    if let Some(n) = cfg.n_paths {
        sim.n_paths = n;
    }
    if let Some(b) = cfg.bridge_correction {
        sim.bridge_correction = b;
    }
    if let Some(seed) = cfg.seed {
        sim.seed = seed;
    }
    if let Some(seed) = overrides.seed {
        sim.seed = seed;
    }
    sim
}

fn task_verify_mc(
    cfg: &RunConfig,
    overrides: &Overrides,
    prefix: &str,
    spectral: &SpectralData,
    summary: &mut Summary,
) -> Result<usize, CliError> {
    let sim = sim_config(cfg, overrides, spectral);
    if sim.dt <= 0.0 || sim.horizon < sim.dt || sim.n_paths == 0 {
        return Err(CliError::Validation(format!(
            "invalid simulation parameters: dt={}, horizon={}, n_paths={}",
            sim.dt, sim.horizon, sim.n_paths
        )));
    }
    let mut checker = Checker::new(prefix, "verify-mc");
    summary.int("n_paths", sim.n_paths as u64);
    summary.int("seed", sim.seed);
    summary.float("dt", sim.dt);
    summary.float("horizon", sim.horizon);
    if spectral.lambda0() > 0.0 {
        summary.float("censoring_bound", (-spectral.lambda0() * sim.horizon).exp());
    }

    // Exit-time Laplace transform against e^{-x Phi(q)}.
    for (x, q) in [(0.5, 0.5), (1.0, 1.0), (2.0, 0.5), (1.0, 2.0)] {
        let est = estimate_exit_laplace(spectral, x, q, &sim).map_err(validation)?;
        let target = (-x * spectral.phi(q)).exp();
        let tol = 3.0 * est.std_err;
        checker.check(
            &format!("exit-laplace-x{x}-q{q}"),
            target,
            est.estimate,
            tol,
            (est.estimate - target).abs() <= tol,
        );
    }

    let l0 = spectral.lambda0();
    if l0 > 0.0 {
        let grid = GridSpec::new(1e-3, 50.0);
        for lf in [0.5, 1.0] {
            let lambda = lf * l0;
            let qsd = build_qsd(spectral, lambda, &grid).map_err(validation)?;
            for t in [1.0, 2.0] {
                if t > sim.horizon {
                    continue;
                }
                let est = estimate_survival(spectral, &qsd, t, &sim).map_err(validation)?;
                let target = (-lambda * t).exp();
                let tol = 3.0 * est.std_err;
                checker.check(
                    &format!("survival-lambda{lambda:.6}-t{t}"),
                    target,
                    est.estimate,
                    tol,
                    (est.estimate - target).abs() <= tol,
                );
            }
        }

        // Default observation time: as late as possible up to t = 2 while
        // keeping the expected survivor count near 2000.
        let t_obs = cfg.t_obs.unwrap_or_else(|| {
            let cap = (sim.n_paths as f64 / 2000.0).ln().max(0.0) / l0;
            2.0f64.min(cap)
        });
        let qsd = build_qsd(spectral, l0, &grid).map_err(validation)?;
        let out = conditional_law(spectral, &qsd, t_obs, &sim).map_err(validation)?;
        checker.check(
            &format!("stationarity-ks-t{t_obs}"),
            0.0,
            out.ks,
            out.ks_threshold,
            out.ks <= out.ks_threshold,
        );
        summary.int("stationarity_survivors", out.survivors as u64);
    } else {
        println!("note: lambda0 = 0, survival/stationarity checks skipped (no QSD exists)");
        summary.text("skipped", "mc-qsd-checks-no-critical-rate");
    }

    if cfg.emit_taus.unwrap_or(false) {
        let x0 = cfg.x0.unwrap_or(1.0);
        let taus = exit_times(spectral, x0, &sim).map_err(validation)?;
        let mut file = CsvFile::new(prefix, "tau", "path,tau");
        for (i, tau) in taus.iter().enumerate() {
            file.row(&[i.to_string(), fmt_f(tau.unwrap_or(f64::INFINITY))]);
        }
        file.write()?;
        summary.float("tau_x0", x0);
    }

    checker.finish(summary)
}
