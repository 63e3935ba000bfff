use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, NeuralParams, NeuralSearch, SolverGrid};
use super::metrics::compute_metrics;
use super::records::{RecordWriter, ResultRecord};
use super::summary::{summarize, Summary};
use super::Method;
use crate::data::{generate_synthetic, load_manifest, random_sampling_mask, Dataset};
use crate::error::{Error, Result};
use crate::mask::SamplingMask;
use crate::model::{train_gcn, train_timegnn, TrainConfig};
use crate::solver::{solve, SolverConfig};
use crate::spectral::{normalized_laplacian, LaplacianBundle};

/// Dataset plus the Laplacians every method needs.
pub struct Prepared {
    pub dataset: Dataset,
    pub bundle: LaplacianBundle,
}

impl Prepared {
    pub fn new(dataset: Dataset) -> Result<Self> {
        let bundle = normalized_laplacian(&dataset.graph)?;
        Ok(Self { dataset, bundle })
    }

    pub fn truth(&self) -> &Array2<f64> {
        self.dataset.signal.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuralRun {
    pub params: NeuralParams,
    pub epsilon: f64,
    pub epochs: usize,
}

/// Hyperparameters fixed for one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodParams {
    Solver(SolverConfig),
    Neural(NeuralRun),
    Mean,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn name_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the (density, repetition) cell; independent of execution order.
pub fn cell_seed(base_seed: u64, density: f64, repetition: usize) -> u64 {
    base_seed ^ splitmix64(density.to_bits() ^ splitmix64(repetition as u64))
}

fn method_seed(cell: u64, method: Method) -> u64 {
    splitmix64(cell ^ name_hash(method.name()))
}

/// Fills every unsampled entry with the mean of its column's observations.
pub fn mean_imputation(observed: &Array2<f64>, mask: &SamplingMask) -> Result<Array2<f64>> {
    let mut out = mask.apply(observed)?;
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let (mut sum, mut count) = (0.0, 0usize);
        for (i, v) in col.iter().enumerate() {
            if mask.is_sampled(i, j) {
                sum += v;
                count += 1;
            }
        }
        let fill = if count > 0 { sum / count as f64 } else { 0.0 };
        for (i, v) in col.iter_mut().enumerate() {
            if !mask.is_sampled(i, j) {
                *v = fill;
            }
        }
    }
    Ok(out)
}

/// Reconstructs the masked truth with one method. Returns the estimate and
/// whether the method converged.
pub fn run_method(method: Method, params: &MethodParams, prep: &Prepared, mask: &SamplingMask, seed: u64) -> Result<(Array2<f64>, bool)> {
    let observed = mask.apply(prep.truth())?;
    match (method, params) {
        (Method::Mean, _) => Ok((mean_imputation(&observed, mask)?, true)),
        (Method::Tgsr | Method::Graphtrss, MethodParams::Solver(cfg)) => {
            let out = solve(&observed, mask, prep.bundle.laplacian_csr(), cfg)?;
            Ok((out.x, out.converged))
        }
        (Method::Timegnn | Method::Gcn, MethodParams::Neural(run)) => {
            let tc = TrainConfig {
                learning_rate: run.params.learning_rate,
                weight_decay: run.params.weight_decay,
                lambda: run.params.lambda,
                epsilon: run.epsilon,
                epochs: run.epochs,
                seed,
                ..TrainConfig::default()
            };
            let out = if method == Method::Timegnn {
                train_timegnn(&observed, mask, &prep.bundle, &run.params.model, &tc)?.reconstruction
            } else {
                train_gcn(&observed, mask, &prep.dataset.graph, &prep.bundle, &run.params.model, &tc)?.reconstruction
            };
            Ok((out, true))
        }
        (m, p) => Err(Error::config(m.name(), format!("parameters {p:?} do not fit this method"))),
    }
}

/// The unsampled entries, or every entry when the mask is full.
fn eval_indices(mask: &SamplingMask) -> Vec<(usize, usize)> {
    let un = mask.unsampled_indices();
    if !un.is_empty() {
        return un;
    }
    let (n, m) = mask.dim();
    (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
}

fn solver_candidates(grid: &SolverGrid, sobolev: bool) -> Vec<SolverConfig> {
    let eps: &[f64] = if sobolev { &grid.epsilon } else { &[0.0] };
    let mut out = Vec::new();
    for &upsilon in &grid.upsilon {
        for &epsilon in eps {
            out.push(SolverConfig {
                upsilon,
                epsilon,
                cg_tol: grid.cg_tol,
                cg_max_iter: grid.cg_max_iter,
            });
        }
    }
    out
}

fn log_uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        return r[0];
    }
    rng.random_range(r[0].ln()..r[1].ln()).exp()
}

fn neural_candidates(search: &NeuralSearch, trials: usize, seed: u64) -> Vec<NeuralRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng, v: &[usize]| v[rng.random_range(0..v.len())];
    let mut params = vec![search.fixed];
    for _ in 0..trials {
        let mut p = search.fixed;
        p.model.layers = pick(&mut rng, &search.layers);
        p.model.hidden = pick(&mut rng, &search.hidden);
        p.model.alpha = pick(&mut rng, &search.alpha);
        p.model.activation = search.activation[rng.random_range(0..search.activation.len())];
        p.learning_rate = log_uniform(&mut rng, search.learning_rate);
        p.weight_decay = log_uniform(&mut rng, search.weight_decay);
        p.lambda = log_uniform(&mut rng, search.lambda);
        params.push(p);
    }
    params
        .into_iter()
        .map(|params| NeuralRun {
            params,
            epsilon: search.epsilon,
            epochs: search.epochs,
        })
        .collect()
}

fn candidates(cfg: &ExperimentConfig, method: Method) -> Vec<MethodParams> {
    let trials = |s: &NeuralSearch| if cfg.tune { s.trials } else { 0 };
    let seed = splitmix64(cfg.base_seed ^ name_hash(method.name()));
    let all: Vec<MethodParams> = match method {
        Method::Mean => vec![MethodParams::Mean],
        Method::Tgsr => solver_candidates(&cfg.tgsr, false).into_iter().map(MethodParams::Solver).collect(),
        Method::Graphtrss => solver_candidates(&cfg.graphtrss, true).into_iter().map(MethodParams::Solver).collect(),
        Method::Timegnn => neural_candidates(&cfg.timegnn, trials(&cfg.timegnn), seed).into_iter().map(MethodParams::Neural).collect(),
        Method::Gcn => neural_candidates(&cfg.gcn, trials(&cfg.gcn), seed).into_iter().map(MethodParams::Neural).collect(),
    };
    if cfg.tune {
        all
    } else {
        all.into_iter().take(1).collect()
    }
}

/// Picks the candidate with the lowest density-averaged RMSE on a dedicated
/// repetition index that the evaluation never uses.
fn tune(cfg: &ExperimentConfig, method: Method, prep: &Prepared, densities: &[f64]) -> Result<MethodParams> {
    let cands = candidates(cfg, method);
    if cands.len() == 1 {
        return Ok(cands[0]);
    }
    let tune_rep = cfg.repetitions;
    let masks = densities
        .iter()
        .map(|&d| {
            let seed = cell_seed(cfg.base_seed, d, tune_rep);
            random_sampling_mask(prep.dataset.graph.n(), prep.dataset.signal.n_times(), d, seed).map(|m| (m, seed))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cands.len()).flat_map(|c| (0..masks.len()).map(move |k| (c, k))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, k)| {
            let (mask, seed) = &masks[k];
            match run_method(method, &cands[c], prep, mask, method_seed(*seed, method)) {
                Ok((x, _)) => compute_metrics(&x, prep.truth(), &eval_indices(mask)).map(|m| m.rmse).unwrap_or(f64::INFINITY),
                Err(e) => {
                    log::debug!("{method} candidate {c} failed during tuning: {e}");
                    f64::INFINITY
                }
            }
        })
        .collect();
    let mut best = (0, f64::INFINITY);
    for (c, chunk) in scores.chunks(masks.len()).enumerate() {
        let avg = chunk.iter().sum::<f64>() / chunk.len() as f64;
        log::debug!("{method} candidate {c}: tuning rmse {avg}");
        if avg < best.1 {
            best = (c, avg);
        }
    }
    log::info!("{method}: selected candidate {} of {} (tuning rmse {})", best.0, cands.len(), best.1);
    Ok(cands[best.0])
}

fn run_cell(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    methods: &[(Method, MethodParams)],
    density: f64,
    repetition: usize,
) -> Result<Vec<ResultRecord>> {
    let seed = cell_seed(cfg.base_seed, density, repetition);
    let mask = random_sampling_mask(prep.dataset.graph.n(), prep.dataset.signal.n_times(), density, seed)?;
    let hash = mask.hash_hex();
    let eval = eval_indices(&mask);
    let mut out = Vec::with_capacity(methods.len());
    for (method, params) in methods {
        let start = Instant::now();
        let result = run_method(*method, params, prep, &mask, method_seed(seed, *method))
            .and_then(|(x, converged)| compute_metrics(&x, prep.truth(), &eval).map(|m| (m, converged)));
        let elapsed = start.elapsed().as_secs_f64();
        let mut rec = ResultRecord {
            method: *method,
            dataset: prep.dataset.name.clone(),
            density,
            repetition,
            rmse: None,
            mae: None,
            mape: None,
            wall_time_seconds: cfg.record_wall_time.then_some(elapsed),
            converged: false,
            mask_hash: hash.clone(),
        };
        match result {
            Ok((m, converged)) => {
                rec.rmse = Some(m.rmse);
                rec.mae = Some(m.mae);
                rec.mape = m.mape;
                rec.converged = converged;
                if m.mape_skipped > 0 {
                    log::debug!("{method} density {density} rep {repetition}: {} entries skipped in MAPE", m.mape_skipped);
                }
            }
            Err(e) => log::warn!("{method} failed at density {density}, repetition {repetition}: {e}"),
        }
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutcome {
    /// Ordered by (density, repetition, method).
    pub records: Vec<ResultRecord>,
    pub params: BTreeMap<String, MethodParams>,
}

/// Like [`run_monte_carlo`], handing each density's records to `on_batch`
/// as soon as they are complete.
pub fn run_monte_carlo_with(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    densities: &[f64],
    mut on_batch: impl FnMut(&[ResultRecord]) -> Result<()>,
) -> Result<MonteCarloOutcome> {
    cfg.validate()?;
    let pool = match cfg.threads {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?,
        ),
        None => None,
    };
    let tune_densities = if cfg.tune_densities.is_empty() { densities.to_vec() } else { cfg.tune_densities.clone() };
    let mut methods = Vec::new();
    let mut params = BTreeMap::new();
    for method in cfg.resolved_methods() {
        let p = in_pool(pool.as_ref(), || tune(cfg, method, prep, &tune_densities))?;
        params.insert(method.name().to_string(), p);
        methods.push((method, p));
    }
    let mut records = Vec::new();
    for &density in densities {
        let cells = in_pool(pool.as_ref(), || {
            (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| run_cell(cfg, prep, &methods, density, rep))
                .collect::<Result<Vec<_>>>()
        })?;
        let batch: Vec<ResultRecord> = cells.into_iter().flatten().collect();
        on_batch(&batch)?;
        log::info!("density {density}: {} records", batch.len());
        records.extend(batch);
    }
    Ok(MonteCarloOutcome { records, params })
}

fn in_pool<T: Send>(pool: Option<&rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

/// Tunes each method, then runs every (density, repetition) cell.
pub fn run_monte_carlo(cfg: &ExperimentConfig, prep: &Prepared, densities: &[f64]) -> Result<MonteCarloOutcome> {
    run_monte_carlo_with(cfg, prep, densities, |_| Ok(()))
}

/// Loads the configured dataset and the densities its manifest suggests.
pub fn load_experiment_dataset(cfg: &ExperimentConfig) -> Result<(Dataset, Vec<f64>)> {
    if cfg.dataset == "synthetic" {
        return Ok((generate_synthetic(&cfg.synthetic)?, Vec::new()));
    }
    let manifest = load_manifest(std::path::Path::new(&cfg.dataset))?;
    Ok((manifest.load_dataset()?, manifest.densities.clone()))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<ResultRecord>,
    pub summary: Summary,
    pub params: BTreeMap<String, MethodParams>,
    pub output_dir: PathBuf,
}

/// Full benchmark: writes `records.csv` incrementally, then `summary.csv`,
/// `curve.csv` and `params.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (dataset, fallback) = load_experiment_dataset(cfg)?;
    let densities = cfg.resolved_densities(&fallback)?;
    let prep = Prepared::new(dataset)?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut writer = RecordWriter::new(std::fs::File::create(dir.join("records.csv"))?)?;
    let outcome = run_monte_carlo_with(cfg, &prep, &densities, |batch| writer.write_batch(batch))?;
    let summary = summarize(&outcome.records)?;
    summary.write_summary_csv(&dir.join("summary.csv"))?;
    summary.write_curve_csv(&dir.join("curve.csv"))?;
    std::fs::write(dir.join("params.json"), serde_json::to_string_pretty(&outcome.params)? + "\n")?;
    Ok(ExperimentOutcome {
        records: outcome.records,
        summary,
        params: outcome.params,
        output_dir: dir,
    })
}
