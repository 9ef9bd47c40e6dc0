//! Grid search, final runs and iteration-count experiments over a dataset.
//!
//! Every sampling mask is drawn from a seed derived from
//! `(master_seed, stream, density, trial)`, so any trial can be rerun alone
//! and the result files depend only on the configuration.

pub mod config;
mod idw;
pub mod plot;
mod synthetic;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{DatasetSpec, ExperimentConfig, SyntheticSpec};
pub use idw::idw_baseline;
pub use synthetic::synthetic_smooth;
pub use table::{GridPoint, Method, ResultRow, ResultTable, SummaryRow};

use crate::error::{Error, Result};
use crate::geo_graph::GeoGraph;
use crate::ingest::{self, Dataset, DateWindow, JhuLayout};
use crate::reconstruction::{ReconProblem, Variant};
use crate::sampling::{draw_mask, observe, trial_seed, SamplingPlan, SeedStream};
use crate::spectral::{ShiftedOperator, SpectralDecomp};
use crate::tv_signal::{mse, SamplingMask};
use plot::{LinePlot, Series};

/// Distance exponent of the interpolation baseline.
pub const IDW_POWER: f64 = 2.0;

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    match spec {
        DatasetSpec::Synthetic(s) => synthetic_smooth(s),
        DatasetSpec::JhuGlobal { path, start, end, clamp_negative } => {
            let window = DateWindow::new(*start, *end)?;
            let raw = ingest::parse_jhu(path, JhuLayout::Global, Some(window))?;
            ingest::cumulative_to_new(&raw, *clamp_negative)
        }
        DatasetSpec::JhuUsa { path, start, end, clamp_negative } => {
            let window = DateWindow::new(*start, *end)?;
            let raw = ingest::parse_jhu(path, JhuLayout::Usa, Some(window))?;
            ingest::cumulative_to_new(&raw, *clamp_negative)
        }
        DatasetSpec::Matrix { values, coords } => ingest::load_matrix_dataset(values, coords),
    }
}

/// Outcome of a grid search: every evaluated point and the best per density.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub points: Vec<GridPoint>,
    pub best: Vec<GridPoint>,
}

pub struct Experiment {
    config: ExperimentConfig,
    dataset: Dataset,
    graph: GeoGraph<f64>,
    decomp: Option<Arc<SpectralDecomp<f64>>>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dataset = load_dataset(&config.dataset)?;
        Self::with_dataset(config, dataset)
    }

    pub fn with_dataset(config: ExperimentConfig, dataset: Dataset) -> Result<Self> {
        config.validate()?;
        let graph = GeoGraph::build(&dataset.nodes, config.k, config.metric)?;
        let probe = ShiftedOperator::new(graph.laplacian(), 1.0, config.beta)?;
        let decomp = probe.decomposition().cloned();
        Ok(Self { config, dataset, graph, decomp })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn graph(&self) -> &GeoGraph<f64> {
        &self.graph
    }

    pub fn mask(&self, stream: SeedStream, density: f64, trial: usize) -> Result<SamplingMask<f64>> {
        let n = self.dataset.n_nodes();
        let seed = trial_seed(self.config.master_seed, stream, density, trial);
        let plan = SamplingPlan::new(density, n, seed)?;
        observe(draw_mask(&plan, n, self.dataset.n_steps())?, &self.dataset.signal)
    }

    /// The Qiu problem ignores `epsilon` and uses `β = 1`.
    pub fn problem<'a>(
        &'a self,
        mask: &'a SamplingMask<f64>,
        method: Method,
        lambda: f64,
        epsilon: f64,
    ) -> Result<ReconProblem<'a, f64>> {
        let l = self.graph.laplacian();
        let (op, variant) = match method {
            Method::Qiu => (ShiftedOperator::new(l, 0.0, 1.0)?, Variant::Qiu),
            Method::Sobolev => {
                let op = match &self.decomp {
                    Some(d) => ShiftedOperator::with_decomposition(l, epsilon, self.config.beta, d.clone())?,
                    None => ShiftedOperator::new(l, epsilon, self.config.beta)?,
                };
                (op, Variant::Sobolev)
            }
            Method::IdwBaseline => {
                return Err(Error::InvalidParameter("idw-baseline is not a variational problem".into()))
            }
        };
        let p = ReconProblem::with_operator(op, mask, lambda, variant)?.with_tol(self.config.tol);
        Ok(match self.config.max_iters {
            Some(m) => p.with_max_iters(m),
            None => p,
        })
    }

    /// Reconstructs one masked trial and scores it.
    pub fn evaluate(
        &self,
        mask: &SamplingMask<f64>,
        method: Method,
        lambda: f64,
        epsilon: f64,
        density: f64,
        trial: usize,
    ) -> Result<ResultRow> {
        let start = Instant::now();
        let (x_hat, iterations, converged) = match method {
            Method::IdwBaseline => {
                let x = idw_baseline(&self.dataset.nodes, self.config.metric, mask, self.config.k, IDW_POWER)?;
                (x, 0, true)
            }
            _ => {
                let r = self.problem(mask, method, lambda, epsilon)?.solve()?;
                (r.x_hat, r.iterations, r.converged)
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        let err = mse(&x_hat, &self.dataset.signal, self.config.mse_scope, Some(mask))?;
        let (lambda, epsilon, beta) = match method {
            Method::Qiu => (Some(lambda), Some(0.0), Some(1.0)),
            Method::Sobolev => (Some(lambda), Some(epsilon), Some(self.config.beta)),
            Method::IdwBaseline => (None, None, None),
        };
        Ok(ResultRow {
            method,
            density,
            lambda,
            epsilon,
            beta,
            trial,
            mse: err,
            iterations,
            converged,
            wall_time_s,
        })
    }

    fn grid(&self, method: Method) -> Result<Vec<(f64, f64)>> {
        let mut lambdas = self.config.lambda_grid.clone();
        let mut epsilons = self.config.epsilon_grid.clone();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        epsilons.sort_by(f64::total_cmp);
        epsilons.dedup();
        Ok(match method {
            Method::Qiu => lambdas.iter().map(|&l| (l, 0.0)).collect(),
            Method::Sobolev => lambdas
                .iter()
                .flat_map(|&l| epsilons.iter().map(move |&e| (l, e)))
                .collect(),
            Method::IdwBaseline => {
                return Err(Error::InvalidParameter("idw-baseline has no parameters to search".into()))
            }
        })
    }

    /// Mean MSE over `trials_search` masks for every grid point and density.
    /// Ties go to the smaller `λ`, then the smaller `ε`.
    pub fn grid_search(&self, method: Method) -> Result<GridSearch> {
        let grid = self.grid(method)?;
        let trials = self.config.trials_search;
        let mut points = Vec::new();
        let mut best = Vec::new();
        for &density in &self.config.densities {
            let masks = (0..trials)
                .map(|t| self.mask(SeedStream::GridSearch, density, t))
                .collect::<Result<Vec<_>>>()?;
            let jobs: Vec<(usize, usize)> =
                (0..grid.len()).flat_map(|g| (0..trials).map(move |t| (g, t))).collect();
            let rows = jobs
                .par_iter()
                .map(|&(g, t)| {
                    let (lambda, epsilon) = grid[g];
                    self.evaluate(&masks[t], method, lambda, epsilon, density, t)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut winner: Option<GridPoint> = None;
            for (g, chunk) in rows.chunks(trials).enumerate() {
                let mses: Vec<f64> = chunk.iter().map(|r| r.mse).collect();
                let point = GridPoint {
                    method,
                    density,
                    lambda: grid[g].0,
                    epsilon: grid[g].1,
                    mean_mse: table::mean(&mses),
                    nonconverged_trials: chunk.iter().filter(|r| !r.converged).count(),
                };
                if winner.as_ref().is_none_or(|w| point.mean_mse < w.mean_mse) && point.mean_mse.is_finite() {
                    winner = Some(point.clone());
                }
                points.push(point);
            }
            best.push(winner.ok_or_else(|| {
                Error::NumericalFailure(format!("no grid point produced a finite MSE at density {density}"))
            })?);
        }
        Ok(GridSearch { points, best })
    }

    /// `trials_final` fresh masks per density with the selected parameters.
    pub fn run_final(&self, method: Method, best: &[GridPoint]) -> Result<ResultTable> {
        let mut table = ResultTable::default();
        for &density in &self.config.densities {
            let (lambda, epsilon) = match method {
                Method::IdwBaseline => (0.0, 0.0),
                _ => {
                    let b = best_for(best, method, density)?;
                    (b.lambda, b.epsilon)
                }
            };
            let rows = (0..self.config.trials_final)
                .into_par_iter()
                .map(|t| {
                    let mask = self.mask(SeedStream::Final, density, t)?;
                    self.evaluate(&mask, method, lambda, epsilon, density, t)
                })
                .collect::<Result<Vec<_>>>()?;
            table.rows.extend(rows);
        }
        Ok(table)
    }

    /// Solves both variants on the same mask with the Sobolev-selected `λ`.
    pub fn iteration_experiment(&self, sobolev_best: &[GridPoint]) -> Result<ResultTable> {
        let mut table = ResultTable::default();
        for &density in &self.config.densities {
            let b = best_for(sobolev_best, Method::Sobolev, density)?;
            let pairs = (0..self.config.trials_final)
                .into_par_iter()
                .map(|t| {
                    let mask = self.mask(SeedStream::Final, density, t)?;
                    let q = self.evaluate(&mask, Method::Qiu, b.lambda, 0.0, density, t)?;
                    let s = self.evaluate(&mask, Method::Sobolev, b.lambda, b.epsilon, density, t)?;
                    Ok((q, s))
                })
                .collect::<Result<Vec<_>>>()?;
            let (q, s): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            table.rows.extend(q);
            table.rows.extend(s);
        }
        Ok(table)
    }
}

fn best_for(best: &[GridPoint], method: Method, density: f64) -> Result<&GridPoint> {
    best.iter()
        .find(|b| b.method == method && b.density == density)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("no selected {method} parameters for density {density}"))
        })
}

fn write_file(path: &Path, write: impl FnOnce(fs::File) -> Result<()>) -> Result<PathBuf> {
    let file = fs::File::create(path).map_err(|e| Error::Output(path.to_path_buf(), e))?;
    write(file)?;
    Ok(path.to_path_buf())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Output(dir.to_path_buf(), e))
}

pub fn mse_plot(table: &ResultTable) -> LinePlot {
    let summary = table.summary();
    LinePlot {
        title: "Mean squared error vs sampling density".into(),
        x_label: "sampling density".into(),
        y_label: "mean MSE".into(),
        log_y: false,
        series: table
            .methods()
            .into_iter()
            .map(|m| Series {
                name: m.name().into(),
                points: summary.iter().filter(|s| s.method == m).map(|s| (s.density, s.mean_mse)).collect(),
            })
            .collect(),
    }
}

pub fn iterations_plot(table: &ResultTable) -> LinePlot {
    let summary = table.summary();
    LinePlot {
        title: "CG iterations vs sampling density".into(),
        x_label: "sampling density".into(),
        y_label: "mean iterations (log scale)".into(),
        log_y: true,
        series: table
            .methods()
            .into_iter()
            .filter(|m| m.is_iterative())
            .map(|m| Series {
                name: m.name().into(),
                points: summary
                    .iter()
                    .filter(|s| s.method == m)
                    .map(|s| (s.density, s.mean_iterations))
                    .collect(),
            })
            .collect(),
    }
}

/// Writes `<name>.csv`, `<name>_summary.csv`, `<name>_timings.csv`,
/// `<name>_mse.svg` and, when an iterative method is present,
/// `<name>_iterations.svg`. Returns the written paths.
pub fn emit_outputs(dir: &Path, name: &str, table: &ResultTable) -> Result<Vec<PathBuf>> {
    if table.is_empty() {
        return Err(Error::EmptySelection(format!("result table {name:?} is empty; nothing to write")));
    }
    ensure_dir(dir)?;
    let mut written = vec![
        write_file(&dir.join(format!("{name}.csv")), |f| table.write_csv(f))?,
        write_file(&dir.join(format!("{name}_summary.csv")), |f| table.write_summary_csv(f))?,
        write_file(&dir.join(format!("{name}_timings.csv")), |f| table.write_timings_csv(f))?,
    ];
    written.extend(emit_plots(dir, name, table)?);
    Ok(written)
}

/// Renders the SVG charts for a table.
pub fn emit_plots(dir: &Path, name: &str, table: &ResultTable) -> Result<Vec<PathBuf>> {
    if table.is_empty() {
        return Err(Error::EmptySelection(format!("result table {name:?} is empty; nothing to plot")));
    }
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let svg = mse_plot(table).render()?;
    written.push(write_file(&dir.join(format!("{name}_mse.svg")), |mut f| {
        std::io::Write::write_all(&mut f, svg.as_bytes()).map_err(Error::Io)
    })?);
    if table.methods().iter().any(|m| m.is_iterative()) {
        let svg = iterations_plot(table).render()?;
        written.push(write_file(&dir.join(format!("{name}_iterations.svg")), |mut f| {
            std::io::Write::write_all(&mut f, svg.as_bytes()).map_err(Error::Io)
        })?);
    }
    Ok(written)
}

/// Writes `grid_<method>.csv` and `best_<method>.csv`.
pub fn emit_grid(dir: &Path, method: Method, search: &GridSearch) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    Ok(vec![
        write_file(&dir.join(format!("grid_{method}.csv")), |f| table::write_grid_csv(f, &search.points))?,
        write_file(&dir.join(format!("best_{method}.csv")), |f| table::write_grid_csv(f, &search.best))?,
    ])
}

pub fn read_best(path: &Path) -> Result<Vec<GridPoint>> {
    let file = fs::File::open(path)?;
    table::read_grid_csv(file)
}
