//! `tvgs`: generate synthetic data, reconstruct one mask, run Monte Carlo
//! benchmarks and rebuild summaries from records.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tvgs::bench::{
    compute_metrics, load_experiment_dataset, read_records, run_experiment, run_method, summarize, ExperimentConfig, Method,
    MethodParams, NeuralRun, Prepared,
};
use tvgs::data::{generate_synthetic, random_sampling_mask, write_matrix_csv, write_nodes_csv, DatasetManifest, SyntheticConfig};
use tvgs::solver::SolverConfig;
use tvgs::{Error, Result};

#[derive(Parser)]
#[command(name = "tvgs", version, about = "Time-varying graph signal reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as nodes.csv, signals.csv and manifest.json.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Synthetic generator settings (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Reconstruct one random mask of one dataset with one method.
    Reconstruct {
        /// Manifest path, or `synthetic`.
        #[arg(long, default_value = "synthetic")]
        dataset: String,
        /// Experiment config supplying hyperparameters (first grid point).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV for the completed matrix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo benchmark from an experiment config.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Rebuild summary.csv and curve.csv from a records CSV.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: format!("cannot read config: {e}"),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn generate(out: &Path, seed: Option<u64>, config: Option<&Path>) -> Result<()> {
    let mut cfg: SyntheticConfig = match config {
        Some(p) => read_json(p)?,
        None => SyntheticConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let d = generate_synthetic(&cfg)?;
    std::fs::create_dir_all(out)?;
    let coords = d.graph.coords().ok_or_else(|| Error::InvalidInput("synthetic graph has no coordinates".into()))?;
    write_nodes_csv(&out.join("nodes.csv"), coords)?;
    write_matrix_csv(&out.join("signals.csv"), d.signal.values())?;
    let manifest = DatasetManifest {
        name: d.name.clone(),
        nodes_path: "nodes.csv".into(),
        signals_path: "signals.csv".into(),
        knn_k: d.knn_k,
        densities: (1..=9).map(|k| k as f64 / 10.0).collect(),
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}", serde_json::json!({"nodes": d.graph.n(), "times": d.signal.n_times(), "out": out}));
    Ok(())
}

fn default_params(cfg: &ExperimentConfig, method: Method) -> MethodParams {
    let solver = |g: &tvgs::bench::SolverGrid, eps: f64| {
        MethodParams::Solver(SolverConfig {
            upsilon: g.upsilon[0],
            epsilon: eps,
            cg_tol: g.cg_tol,
            cg_max_iter: g.cg_max_iter,
        })
    };
    let neural = |s: &tvgs::bench::NeuralSearch| {
        MethodParams::Neural(NeuralRun {
            params: s.fixed,
            epsilon: s.epsilon,
            epochs: s.epochs,
        })
    };
    match method {
        Method::Mean => MethodParams::Mean,
        Method::Tgsr => solver(&cfg.tgsr, 0.0),
        Method::Graphtrss => solver(&cfg.graphtrss, cfg.graphtrss.epsilon[0]),
        Method::Timegnn => neural(&cfg.timegnn),
        Method::Gcn => neural(&cfg.gcn),
    }
}

fn reconstruct(dataset: &str, config: Option<&Path>, method: Method, density: f64, seed: u64, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if config.is_none() || dataset != "synthetic" {
        cfg.dataset = dataset.to_string();
    }
    cfg.methods = vec![method];
    cfg.validate()?;
    let (d, _) = load_experiment_dataset(&cfg)?;
    let prep = Prepared::new(d)?;
    let mask = random_sampling_mask(prep.dataset.graph.n(), prep.dataset.signal.n_times(), density, seed)?;
    let (x, converged) = run_method(method, &default_params(&cfg, method), &prep, &mask, seed)?;
    write_matrix_csv(out, &x)?;
    let un = mask.unsampled_indices();
    let rmse = if un.is_empty() { None } else { Some(compute_metrics(&x, prep.truth(), &un)?.rmse) };
    println!(
        "{}",
        serde_json::json!({"method": method.name(), "density": density, "converged": converged, "rmse_unsampled": rmse, "mask_hash": mask.hash_hex(), "out": out})
    );
    Ok(())
}

fn benchmark(config: &Path, out: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    let outcome = run_experiment(&cfg)?;
    for row in &outcome.summary.rows {
        println!(
            "{}",
            serde_json::json!({"method": row.method.name(), "dataset": row.dataset, "mean_rmse": row.mean_rmse, "mean_mae": row.mean_mae, "mean_mape": row.mean_mape, "records": row.records, "failed": row.failed})
        );
    }
    Ok(())
}

fn report(records: &Path, out: &Path) -> Result<()> {
    let recs = read_records(records)?;
    let summary = summarize(&recs)?;
    std::fs::create_dir_all(out)?;
    summary.write_summary_csv(&out.join("summary.csv"))?;
    summary.write_curve_csv(&out.join("curve.csv"))?;
    println!("{}", serde_json::json!({"records": recs.len(), "methods": summary.rows.len(), "out": out}));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { out, seed, config } => generate(&out, seed, config.as_deref()),
        Command::Reconstruct {
            dataset,
            config,
            method,
            density,
            seed,
            out,
        } => reconstruct(&dataset, config.as_deref(), method, density, seed, &out),
        Command::Benchmark { config, out, seed, threads } => benchmark(&config, out, seed, threads),
        Command::Report { records, out } => report(&records, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({"error": "usage", "field": null, "message": first}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let field = match &e {
                Error::InvalidConfig { field, .. } => Some(field.clone()),
                _ => None,
            };
            eprintln!("{}", serde_json::json!({"error": e.kind(), "field": field, "message": e.to_string()}));
            ExitCode::from(if field.is_some() { 2 } else { 1 })
        }
    }
}
