//! Run configuration: a flat TOML file with one nested `[model]` section.
//!
//! All numerics are plain decimal literals; reproducibility of the output
//! bytes relies on bit-stable parsing, so no expressions are accepted.

use serde::Deserialize;

use levy_qsd::{JumpAtom, LevyModel};

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    BmDrift { mu: f64, sigma: f64 },
    CpExpDrift { mu: f64, c: f64, rho: f64 },
    Meromorphic { a: f64, sigma: f64, atoms: Vec<[f64; 2]> },
}

impl ModelConfig {
    pub fn to_model(&self) -> LevyModel {
        match self {
            ModelConfig::BmDrift { mu, sigma } => LevyModel::BmDrift { mu: *mu, sigma: *sigma },
            ModelConfig::CpExpDrift { mu, c, rho } => {
                LevyModel::CpExpDrift { mu: *mu, c: *c, rho: *rho }
            }
            ModelConfig::Meromorphic { a, sigma, atoms } => LevyModel::Meromorphic {
                a: *a,
                sigma: *sigma,
                atoms: atoms
                    .iter()
                    .map(|[w, r]| JumpAtom { weight: *w, rate: *r })
                    .collect(),
            },
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ModelConfig::BmDrift { .. } => "bm-drift",
            ModelConfig::CpExpDrift { .. } => "cp-exp-drift",
            ModelConfig::Meromorphic { .. } => "meromorphic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Describe,
    Spectral,
    Scale,
    Qsd,
    VerifyAnalytic,
    VerifyMc,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        Some(match s {
            "describe" => Task::Describe,
            "spectral" => Task::Spectral,
            "scale" => Task::Scale,
            "qsd" => Task::Qsd,
            "verify-analytic" => Task::VerifyAnalytic,
            "verify-mc" => Task::VerifyMc,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Describe => "describe",
            Task::Spectral => "spectral",
            Task::Scale => "scale",
            Task::Qsd => "qsd",
            Task::VerifyAnalytic => "verify-analytic",
            Task::VerifyMc => "verify-mc",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: String,
    /// Output path prefix; files are written as `<out>-<name>.csv`.
    pub out: Option<String>,

    // Grid parameters (scale, qsd, verify-analytic).
    pub h: Option<f64>,
    pub x_max: Option<f64>,

    // Scale task.
    pub q: Option<f64>,
    pub method: Option<String>,
    pub r: Option<f64>,

    // Qsd task.
    pub lambda: Option<f64>,

    // Spectral table.
    pub q_max: Option<f64>,
    pub n_q: Option<usize>,

    // Monte Carlo (verify-mc).
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub bridge_correction: Option<bool>,
    pub t_obs: Option<f64>,
    pub x0: Option<f64>,
    pub emit_taus: Option<bool>,

    pub model: ModelConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        for (name, v) in [
            ("h", cfg.h),
            ("x_max", cfg.x_max),
            ("q", cfg.q),
            ("r", cfg.r),
            ("lambda", cfg.lambda),
            ("q_max", cfg.q_max),
            ("dt", cfg.dt),
            ("horizon", cfg.horizon),
            ("t_obs", cfg.t_obs),
            ("x0", cfg.x0),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(format!("parameter {name} must be a finite decimal, got {v}"));
                }
            }
        }
        Ok(cfg)
    }

    pub fn task(&self) -> Result<Task, String> {
        Task::parse(&self.task).ok_or_else(|| {
            format!(
                "unknown task '{}' (expected describe|spectral|scale|qsd|verify-analytic|verify-mc)",
                self.task
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::parse(
            "task = \"describe\"\n[model]\nfamily = \"bm-drift\"\nmu = 1.0\nsigma = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.task().unwrap(), Task::Describe);
        assert_eq!(cfg.model.family_name(), "bm-drift");
    }

    #[test]
    fn parses_meromorphic_atoms() {
        let cfg = RunConfig::parse(
            "task = \"spectral\"\n[model]\nfamily = \"meromorphic\"\na = -1.5\nsigma = 0.5\natoms = [[1.0, 2.0], [1.0, 4.0]]\n",
        )
        .unwrap();
        match cfg.model.to_model() {
            LevyModel::Meromorphic { atoms, .. } => assert_eq!(atoms.len(), 2),
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_tasks() {
        assert!(RunConfig::parse(
            "task = \"describe\"\nbogus = 1\n[model]\nfamily = \"bm-drift\"\nmu = 1.0\nsigma = 1.0\n"
        )
        .is_err());
        let cfg = RunConfig::parse(
            "task = \"explode\"\n[model]\nfamily = \"bm-drift\"\nmu = 1.0\nsigma = 1.0\n",
        )
        .unwrap();
        assert!(cfg.task().is_err());
    }

    #[test]
    fn rejects_nan_parameters() {
        assert!(RunConfig::parse(
            "task = \"qsd\"\nlambda = nan\n[model]\nfamily = \"bm-drift\"\nmu = 1.0\nsigma = 1.0\n"
        )
        .is_err());
    }
}
