use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tvsobolev::experiments::{self, Experiment, ExperimentConfig, GridPoint, Method, ResultTable};
use tvsobolev::sampling::SeedStream;
use tvsobolev::spectral::{self, EigOptions};
use tvsobolev::tv_signal::{self, LabeledSignal};
use tvsobolev::{Metric, MseScope};

#[derive(Parser)]
#[command(name = "tvsobolev", version, about = "Reconstruct time-varying graph signals from partial samples")]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: config value, then $TVSOBOLEV_OUTPUT_DIR, then ./results).
    #[arg(long, short, global = true)]
    output_dir: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    metric: Option<Metric>,
    #[arg(long, global = true, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    densities: Option<Vec<f64>>,
    #[arg(long, global = true)]
    trials_search: Option<usize>,
    #[arg(long, global = true)]
    trials_final: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// all | unsampled-only
    #[arg(long, global = true, value_parser = parse_scope)]
    mse_scope: Option<MseScope>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
}

fn parse_scope(s: &str) -> std::result::Result<MseScope, String> {
    match s {
        "all" => Ok(MseScope::All),
        "unsampled-only" => Ok(MseScope::UnsampledOnly),
        _ => Err(format!("unknown MSE scope {s:?} (expected all or unsampled-only)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective configuration as TOML.
    ShowConfig,
    /// Build the kNN graph and write `graph.edges`.
    BuildGraph,
    /// Reconstruct one sampled trial of the dataset.
    Reconstruct {
        #[arg(long, default_value = "sobolev")]
        method: Method,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// Select parameters per density by mean MSE over the search trials.
    GridSearch {
        #[arg(long)]
        method: Method,
    },
    /// Final runs with selected parameters, writing `final*.csv` and plots.
    RunFinal {
        /// Selected Qiu parameters; searched when omitted.
        #[arg(long)]
        best_qiu: Option<PathBuf>,
        /// Selected Sobolev parameters; searched when omitted.
        #[arg(long)]
        best_sobolev: Option<PathBuf>,
        /// Also run the inverse-distance interpolation baseline.
        #[arg(long)]
        with_idw: bool,
    },
    /// Paired CG iteration counts on shared masks, writing `iterations*.csv` and plots.
    Iterations {
        #[arg(long)]
        best_sobolev: Option<PathBuf>,
    },
    /// Conditioning of `L + εI` as `key = value` lines.
    Conditioning {
        #[arg(long, value_delimiter = ',', default_value = "1")]
        epsilon: Vec<f64>,
        /// Also compare Hessian conditioning for this `λ` over the dataset's time steps.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Re-render SVG plots from a result CSV.
    Plot {
        results: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.k {
        cfg.k = v;
    }
    if let Some(v) = o.metric {
        cfg.metric = v;
    }
    if let Some(v) = &o.lambda_grid {
        cfg.lambda_grid = v.clone();
    }
    if let Some(v) = &o.epsilon_grid {
        cfg.epsilon_grid = v.clone();
    }
    if let Some(v) = o.beta {
        cfg.beta = v;
    }
    if let Some(v) = &o.densities {
        cfg.densities = v.clone();
    }
    if let Some(v) = o.trials_search {
        cfg.trials_search = v;
    }
    if let Some(v) = o.trials_final {
        cfg.trials_final = v;
    }
    if let Some(v) = o.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = o.mse_scope {
        cfg.mse_scope = v;
    }
    if let Some(v) = o.tol {
        cfg.tol = v;
    }
    if o.max_iters.is_some() {
        cfg.max_iters = o.max_iters;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn best_params(exp: &Experiment, method: Method, path: Option<&Path>, out: &Path) -> Result<Vec<GridPoint>> {
    match path {
        Some(p) => experiments::read_best(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let search = exp.grid_search(method)?;
            report(&experiments::emit_grid(out, method, &search)?);
            Ok(search.best)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Plot { results, name } = &cli.command {
        let table = ResultTable::read_csv(File::open(results).with_context(|| format!("opening {}", results.display()))?)?;
        let name = name.clone().unwrap_or_else(|| {
            results.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into())
        });
        let out = cli.output_dir.clone().unwrap_or_else(|| ExperimentConfig::default().resolve_output_dir(None));
        report(&experiments::emit_plots(&out, &name, &table)?);
        return Ok(());
    }

    let cfg = load_config(&cli)?;
    let out = cfg.resolve_output_dir(cli.output_dir.as_deref());
    if let Command::ShowConfig = cli.command {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let exp = Experiment::new(cfg)?;
    let cfg = exp.config();

    match cli.command {
        Command::ShowConfig | Command::Plot { .. } => unreachable!(),
        Command::BuildGraph => {
            let g = exp.graph();
            std::fs::create_dir_all(&out)?;
            let path = out.join("graph.edges");
            g.write_edge_list(create(&path)?)?;
            println!("n_nodes = {}", g.n_nodes());
            println!("n_edges = {}", g.n_edges());
            println!("k = {}", g.k());
            println!("sigma = {:.16e}", g.sigma());
            println!("components = {}", g.n_components());
            report(&[path]);
        }
        Command::Reconstruct { method, density, trial, lambda, epsilon } => {
            let mask = exp.mask(SeedStream::Final, density, trial)?;
            std::fs::create_dir_all(&out)?;
            let x_hat = match method {
                Method::IdwBaseline => experiments::idw_baseline(
                    &exp.dataset().nodes,
                    cfg.metric,
                    &mask,
                    cfg.k,
                    experiments::IDW_POWER,
                )?,
                _ => {
                    let r = exp.problem(&mask, method, lambda, epsilon)?.solve()?;
                    print!("{}", r.summary());
                    let path = out.join("residuals.csv");
                    r.write_residuals_csv(create(&path)?)?;
                    report(&[path]);
                    r.x_hat
                }
            };
            let err = tv_signal::mse(&x_hat, &exp.dataset().signal, cfg.mse_scope, Some(&mask))?;
            println!("mse = {err:.16e}");
            let labeled = LabeledSignal {
                signal: x_hat,
                node_labels: exp.dataset().nodes.labels().to_vec(),
                time_labels: exp.dataset().time_labels.clone(),
            };
            let recon = out.join("reconstruction.csv");
            labeled.write_csv(create(&recon)?)?;
            let mask_path = out.join("mask.txt");
            mask.write_coordinates(create(&mask_path)?)?;
            report(&[recon, mask_path]);
        }
        Command::GridSearch { method } => {
            let search = exp.grid_search(method)?;
            for b in &search.best {
                println!(
                    "{} density={} lambda={} epsilon={} mean_mse={:.6e}{}",
                    b.method,
                    b.density,
                    b.lambda,
                    b.epsilon,
                    b.mean_mse,
                    if b.nonconverged_trials > 0 { " (some solves did not converge)" } else { "" }
                );
            }
            report(&experiments::emit_grid(&out, method, &search)?);
        }
        Command::RunFinal { best_qiu, best_sobolev, with_idw } => {
            let q = best_params(&exp, Method::Qiu, best_qiu.as_deref(), &out)?;
            let s = best_params(&exp, Method::Sobolev, best_sobolev.as_deref(), &out)?;
            let mut table = exp.run_final(Method::Qiu, &q)?;
            table.extend(exp.run_final(Method::Sobolev, &s)?);
            if with_idw {
                table.extend(exp.run_final(Method::IdwBaseline, &[])?);
            }
            print_summary(&table);
            report(&experiments::emit_outputs(&out, "final", &table)?);
        }
        Command::Iterations { best_sobolev } => {
            let s = best_params(&exp, Method::Sobolev, best_sobolev.as_deref(), &out)?;
            let table = exp.iteration_experiment(&s)?;
            print_summary(&table);
            report(&experiments::emit_outputs(&out, "iterations", &table)?);
        }
        Command::Conditioning { epsilon, lambda } => {
            let l = exp.graph().laplacian();
            for (idx, &e) in epsilon.iter().enumerate() {
                if idx > 0 {
                    println!();
                }
                match spectral::condition_number_shifted(l, e, EigOptions::default()) {
                    Ok(r) => print!("{}", r.to_key_value()),
                    Err(err) => {
                        println!("epsilon = {e}\nkappa_shifted = inf\nnote = {err}");
                        continue;
                    }
                }
                if let Some(lam) = lambda {
                    let h = spectral::hessian_condition_compare(l, exp.dataset().n_steps(), lam, e, EigOptions::default())?;
                    print!("{}", h.to_key_value());
                }
            }
        }
    }
    Ok(())
}

fn print_summary(table: &ResultTable) {
    println!("method,density,trials,mean_mse,std_mse,mean_iterations,median_iterations,nonconverged");
    for s in table.summary() {
        println!(
            "{},{},{},{:.6e},{:.6e},{:.1},{:.1},{}",
            s.method, s.density, s.trials, s.mean_mse, s.std_mse, s.mean_iterations, s.median_iterations, s.nonconverged
        );
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
