use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geo_graph::{Metric, DEFAULT_K};
use crate::ingest::DateWindow;
use crate::reconstruction::DEFAULT_TOL;
use crate::tv_signal::MseScope;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TVSOBOLEV_OUTPUT_DIR";

/// The regularization grid used for both `λ` and `ε`.
pub const PARAMETER_GRID: [f64; 16] = [
    1e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 1e2, 2e2, 5e2,
];

pub const DENSITIES_DENSE: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub const DENSITIES_COVID: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.995];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub bumps: usize,
    /// Noise standard deviation relative to the standard deviation of the clean field.
    pub noise_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_nodes: 200,
            n_steps: 30,
            seed: 7,
            bumps: 4,
            noise_fraction: 0.1,
        }
    }
}

fn default_start() -> NaiveDate {
    DateWindow::early_pandemic().start
}

fn default_end() -> NaiveDate {
    DateWindow::early_pandemic().end
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    JhuGlobal {
        path: PathBuf,
        #[serde(default = "default_start")]
        start: NaiveDate,
        #[serde(default = "default_end")]
        end: NaiveDate,
        #[serde(default = "yes")]
        clamp_negative: bool,
    },
    JhuUsa {
        path: PathBuf,
        #[serde(default = "default_start")]
        start: NaiveDate,
        #[serde(default = "default_end")]
        end: NaiveDate,
        #[serde(default = "yes")]
        clamp_negative: bool,
    },
    Matrix {
        values: PathBuf,
        coords: PathBuf,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic(SyntheticSpec::default())
    }
}

impl DatasetSpec {
    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetSpec::Synthetic(_) => {}
            DatasetSpec::JhuGlobal { path, .. } | DatasetSpec::JhuUsa { path, .. } => fix(path),
            DatasetSpec::Matrix { values, coords } => {
                fix(values);
                fix(coords);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub k: usize,
    pub metric: Metric,
    pub lambda_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub beta: f64,
    pub densities: Vec<f64>,
    pub trials_search: usize,
    pub trials_final: usize,
    pub master_seed: u64,
    pub mse_scope: MseScope,
    pub tol: f64,
    /// Defaults to `20·N·M` per solve.
    pub max_iters: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            k: DEFAULT_K,
            metric: Metric::default(),
            lambda_grid: PARAMETER_GRID.to_vec(),
            epsilon_grid: PARAMETER_GRID.to_vec(),
            beta: 1.0,
            densities: DENSITIES_DENSE.to_vec(),
            trials_search: 5,
            trials_final: 100,
            master_seed: 2020,
            mse_scope: MseScope::All,
            tol: DEFAULT_TOL,
            max_iters: None,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file; relative dataset paths are taken from the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            cfg.dataset.rebase(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() || self.epsilon_grid.is_empty() {
            return invalid("parameter grids must be nonempty");
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return invalid(format!("lambda grid value {l} must be positive and finite"));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return invalid(format!("epsilon grid value {e} must be finite and >= 0"));
        }
        if self.densities.is_empty() {
            return invalid("at least one sampling density is required");
        }
        if let Some(d) = self.densities.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return invalid(format!("density {d} outside (0, 1]"));
        }
        if self.trials_search == 0 || self.trials_final == 0 {
            return invalid("trial counts must be at least 1");
        }
        if self.k == 0 {
            return invalid("k must be at least 1");
        }
        if !(self.tol > 0.0) || !self.beta.is_finite() {
            return invalid("tol must be positive and beta finite");
        }
        if let DatasetSpec::Synthetic(s) = &self.dataset {
            if s.n_nodes < 2 || s.n_steps < 2 || !(s.noise_fraction >= 0.0) {
                return invalid("synthetic dataset needs n_nodes, n_steps >= 2 and noise_fraction >= 0");
            }
        }
        Ok(())
    }

    /// Flag value, then config file, then the environment, then `results`.
    pub fn resolve_output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.lambda_grid.len(), 16);
    }

    #[test]
    fn jhu_dataset_with_default_window() {
        let cfg = ExperimentConfig::from_toml_str(
            "densities = [0.5, 0.9]\n[dataset]\nkind = \"jhu-global\"\npath = \"g.csv\"\n",
        )
        .unwrap();
        match cfg.dataset {
            DatasetSpec::JhuGlobal { start, end, clamp_negative, .. } => {
                assert_eq!(start.to_string(), "2020-01-22");
                assert_eq!(end.to_string(), "2020-04-06");
                assert!(clamp_negative);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml_str("densities = [0.0]").is_err());
        assert!(ExperimentConfig::from_toml_str("densities = [1.5]").is_err());
        assert!(ExperimentConfig::from_toml_str("lambda_grid = []").is_err());
        assert!(ExperimentConfig::from_toml_str("epsilon_grid = [-1.0]").is_err());
        assert!(ExperimentConfig::from_toml_str("unknown_key = 3").is_err());
    }
}
