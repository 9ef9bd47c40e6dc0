use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
k = 5
lambda_grid = [0.1, 1.0]
epsilon_grid = [1.0]
densities = [0.5]
trials_search = 1
trials_final = 2

[dataset]
kind = \"synthetic\"
n_nodes = 30
n_steps = 6
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvsobolev"))
        .current_dir(dir)
        .env_remove("TVSOBOLEV_OUTPUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn show_config_applies_overrides() {
    let dir = setup();
    let out = stdout(&run(dir.path(), &["-c", "small.toml", "--k", "7", "--densities", "0.3,0.6", "show-config"]));
    assert!(out.contains("k = 7"));
    assert!(out.contains("densities = [0.3, 0.6]"));
    assert!(out.contains("n_nodes = 30"));
}

#[test]
fn build_graph_writes_edge_list() {
    let dir = setup();
    let out = stdout(&run(dir.path(), &["-c", "small.toml", "-o", "out", "build-graph"]));
    assert!(out.contains("n_nodes = 30\n"));
    assert!(out.contains("k = 5\n"));
    let edges = fs::read_to_string(dir.path().join("out/graph.edges")).unwrap();
    let n_edges: usize = out.lines().find_map(|l| l.strip_prefix("n_edges = ")).unwrap().parse().unwrap();
    assert_eq!(edges.lines().count(), n_edges + 1);
    assert!(edges.starts_with("30 5 "));
}

#[test]
fn reconstruct_writes_artifacts() {
    let dir = setup();
    let out = stdout(&run(
        dir.path(),
        &["-c", "small.toml", "-o", "out", "reconstruct", "--method", "qiu", "--density", "0.5", "--lambda", "0.5"],
    ));
    assert!(out.contains("converged = true"));
    assert!(out.contains("mse = "));
    let recon = fs::read_to_string(dir.path().join("out/reconstruction.csv")).unwrap();
    assert!(recon.starts_with("node,t0,t1,t2,t3,t4,t5\n"));
    assert_eq!(recon.lines().count(), 31);
    let mask = fs::read_to_string(dir.path().join("out/mask.txt")).unwrap();
    assert_eq!(mask.lines().count(), 15 * 6);
    let residuals = fs::read_to_string(dir.path().join("out/residuals.csv")).unwrap();
    assert!(residuals.starts_with("iteration,residual\n"));

    let idw = stdout(&run(
        dir.path(),
        &["-c", "small.toml", "-o", "idw", "reconstruct", "--method", "idw-baseline", "--density", "0.5"],
    ));
    assert!(idw.contains("mse = "));
    assert!(!dir.path().join("idw/residuals.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_tvsobolev"))
        .current_dir(dir.path())
        .env("TVSOBOLEV_OUTPUT_DIR", "from-env")
        .args(["-c", "small.toml", "build-graph"])
        .output()
        .unwrap();
    stdout(&o);
    assert!(dir.path().join("from-env/graph.edges").exists());
}

#[test]
fn grid_search_then_run_final_from_files() {
    let dir = setup();
    stdout(&run(dir.path(), &["-c", "small.toml", "-o", "out", "grid-search", "--method", "qiu"]));
    stdout(&run(dir.path(), &["-c", "small.toml", "-o", "out", "grid-search", "--method", "sobolev"]));
    let grid = fs::read_to_string(dir.path().join("out/grid_qiu.csv")).unwrap();
    assert!(grid.starts_with("method,density,lambda,epsilon,mean_mse,nonconverged_trials\n"));
    assert_eq!(grid.lines().count(), 3);

    let out = stdout(&run(
        dir.path(),
        &[
            "-c",
            "small.toml",
            "-o",
            "final",
            "run-final",
            "--best-qiu",
            "out/best_qiu.csv",
            "--best-sobolev",
            "out/best_sobolev.csv",
        ],
    ));
    assert!(out.contains("qiu,0.5,2,"));
    assert!(!dir.path().join("final/grid_qiu.csv").exists());
    let table = fs::read_to_string(dir.path().join("final/final.csv")).unwrap();
    assert!(table.starts_with("method,density,lambda,epsilon,beta,trial,mse,iterations,converged\n"));
    assert_eq!(table.lines().count(), 5);
    let timings = fs::read_to_string(dir.path().join("final/final_timings.csv")).unwrap();
    assert!(timings.starts_with("method,density,trial,wall_time_s\n"));

    stdout(&run(dir.path(), &["-o", "replot", "plot", "final/final.csv"]));
    assert_eq!(
        fs::read(dir.path().join("replot/final_mse.svg")).unwrap(),
        fs::read(dir.path().join("final/final_mse.svg")).unwrap()
    );
}

#[test]
fn iterations_subcommand_pairs_methods() {
    let dir = setup();
    let out = stdout(&run(dir.path(), &["-c", "small.toml", "-o", "out", "iterations"]));
    assert!(out.contains("qiu,0.5,2,") && out.contains("sobolev,0.5,2,"));
    let svg = fs::read_to_string(dir.path().join("out/iterations_iterations.svg")).unwrap();
    assert_eq!(svg.matches("<g class=\"series\"").count(), 2);
}

#[test]
fn conditioning_reports_key_values() {
    let dir = setup();
    let out = stdout(&run(dir.path(), &["-c", "small.toml", "conditioning", "--epsilon", "0,1,10", "--lambda", "1"]));
    let blocks: Vec<&str> = out.split("\n\n").collect();
    assert_eq!(blocks.len(), 3);
    assert!(blocks[0].contains("kappa_shifted = inf"));
    let kappa = |b: &str| -> f64 {
        b.lines().find_map(|l| l.strip_prefix("kappa_shifted = ")).unwrap().parse().unwrap()
    };
    assert!(kappa(blocks[2]) < kappa(blocks[1]));
    assert!(blocks[1].contains("sandwich_ok = true"));
    assert!(blocks[1].contains("sobolev_better = true"));
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = setup();
    let o = run(dir.path(), &["-c", "missing.toml", "show-config"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));

    fs::write(dir.path().join("bad.toml"), "densities = [1.5]\n").unwrap();
    let o = run(dir.path(), &["-c", "bad.toml", "show-config"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("densit"));

    let o = run(dir.path(), &["-c", "small.toml", "reconstruct", "--density", "0.5", "--method", "nni"]);
    assert!(!o.status.success());
}
