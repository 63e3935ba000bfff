use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Method;
use crate::data::SyntheticConfig;
use crate::error::{Error, Result};
use crate::model::{Activation, ModelConfig};

/// Benchmark description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Manifest path, or `"synthetic"`.
    pub dataset: String,
    pub synthetic: SyntheticConfig,
    pub methods: Vec<Method>,
    /// Empty means the manifest's densities, else `0.1, …, 0.9`.
    pub densities: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub tgsr: SolverGrid,
    pub graphtrss: SolverGrid,
    pub timegnn: NeuralSearch,
    pub gcn: NeuralSearch,
    /// Skip tuning and use the first grid point / `NeuralSearch::fixed`.
    pub tune: bool,
    /// Densities used for tuning; empty means all experiment densities.
    pub tune_densities: Vec<f64>,
    /// Wall time makes records nondeterministic, so it is opt-in.
    pub record_wall_time: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic".into(),
            synthetic: SyntheticConfig::default(),
            methods: vec![Method::Graphtrss, Method::Tgsr],
            densities: Vec::new(),
            repetitions: 50,
            base_seed: 0,
            output_dir: PathBuf::from("results"),
            tgsr: SolverGrid {
                upsilon: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
                epsilon: vec![0.0],
                ..SolverGrid::default()
            },
            graphtrss: SolverGrid::default(),
            timegnn: NeuralSearch::default(),
            gcn: NeuralSearch::default(),
            tune: true,
            tune_densities: Vec::new(),
            record_wall_time: false,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverGrid {
    pub upsilon: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverGrid {
    fn default() -> Self {
        Self {
            upsilon: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            epsilon: vec![0.05],
            cg_tol: 1e-8,
            cg_max_iter: 2000,
        }
    }
}

/// Hyperparameters of one neural training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralParams {
    pub model: ModelConfig,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub lambda: f64,
}

impl Default for NeuralParams {
    fn default() -> Self {
        Self {
            model: ModelConfig {
                layers: 2,
                hidden: 10,
                alpha: 4,
                activation: Activation::Linear,
            },
            learning_rate: 0.005,
            weight_decay: 1e-4,
            lambda: 1e-4,
        }
    }
}

/// Seeded random search; continuous ranges are sampled log-uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralSearch {
    /// Used as-is when tuning is off, and as the first candidate otherwise.
    pub fixed: NeuralParams,
    /// Random candidates drawn in addition to `fixed`.
    pub trials: usize,
    pub layers: Vec<usize>,
    pub hidden: Vec<usize>,
    pub alpha: Vec<usize>,
    pub activation: Vec<Activation>,
    pub learning_rate: [f64; 2],
    pub weight_decay: [f64; 2],
    pub lambda: [f64; 2],
    pub epsilon: f64,
    pub epochs: usize,
}

impl Default for NeuralSearch {
    fn default() -> Self {
        Self {
            fixed: NeuralParams::default(),
            trials: 4,
            layers: vec![1, 2, 3],
            hidden: (2..=10).collect(),
            alpha: vec![2, 3, 4],
            activation: vec![Activation::Relu, Activation::Linear],
            learning_rate: [0.005, 0.05],
            weight_decay: [1e-5, 1e-3],
            lambda: [1e-6, 1e-3],
            epsilon: 0.05,
            epochs: 5000,
        }
    }
}

fn check_range(field: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite()) {
        return Err(Error::config(field, "range must satisfy 0 < lo <= hi"));
    }
    Ok(())
}

fn check_density(field: &str, d: f64) -> Result<()> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::config(field, format!("density {d} outside (0, 1]")));
    }
    Ok(())
}

impl SolverGrid {
    fn validate(&self, name: &str) -> Result<()> {
        if self.upsilon.is_empty() || self.epsilon.is_empty() {
            return Err(Error::config(format!("{name}.upsilon"), "grid must not be empty"));
        }
        if self.upsilon.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::config(format!("{name}.upsilon"), "values must be positive"));
        }
        if self.epsilon.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
            return Err(Error::config(format!("{name}.epsilon"), "values must be nonnegative"));
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iter == 0 {
            return Err(Error::config(format!("{name}.cg_tol"), "tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

impl NeuralSearch {
    fn validate(&self, name: &str) -> Result<()> {
        self.fixed.model.validate().map_err(|e| Error::config(format!("{name}.fixed"), e.to_string()))?;
        if self.epochs == 0 {
            return Err(Error::config(format!("{name}.epochs"), "must be at least 1"));
        }
        if self.trials > 0 {
            for (field, empty) in [
                ("layers", self.layers.is_empty() || self.layers.contains(&0)),
                ("hidden", self.hidden.is_empty() || self.hidden.contains(&0)),
                ("alpha", self.alpha.is_empty() || self.alpha.contains(&0)),
                ("activation", self.activation.is_empty()),
            ] {
                if empty {
                    return Err(Error::config(format!("{name}.{field}"), "choices must be non-empty and positive"));
                }
            }
            check_range(&format!("{name}.learning_rate"), self.learning_rate)?;
            check_range(&format!("{name}.weight_decay"), self.weight_decay)?;
            check_range(&format!("{name}.lambda"), self.lambda)?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("cannot read config: {e}"),
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // manifest paths are relative to the config file
        if cfg.dataset != "synthetic" && Path::new(&cfg.dataset).is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset = dir.join(&cfg.dataset).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be at least 1"));
        }
        for &d in self.densities.iter().chain(&self.tune_densities) {
            check_density("densities", d)?;
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if self.dataset == "synthetic" {
            self.synthetic.validate()?;
        }
        self.tgsr.validate("tgsr")?;
        self.graphtrss.validate("graphtrss")?;
        self.timegnn.validate("timegnn")?;
        self.gcn.validate("gcn")?;
        Ok(())
    }

    /// Sorted, de-duplicated densities, falling back to `fallback` then `0.1..0.9`.
    pub fn resolved_densities(&self, fallback: &[f64]) -> Result<Vec<f64>> {
        let mut d = if !self.densities.is_empty() {
            self.densities.clone()
        } else if !fallback.is_empty() {
            fallback.to_vec()
        } else {
            (1..=9).map(|k| k as f64 / 10.0).collect()
        };
        for &v in &d {
            check_density("densities", v)?;
        }
        d.sort_by(f64::total_cmp);
        d.dedup();
        Ok(d)
    }

    /// Methods in canonical (alphabetical) order, de-duplicated.
    pub fn resolved_methods(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort_by_key(|m| m.name());
        m.dedup();
        m
    }
}
