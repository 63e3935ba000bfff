//! Synthetic smoothly evolving signals: `x_t = x_{t−1} + L^{−1/2} f_t`
//! with a low-frequency start `x_1` of fixed energy.

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::build_knn_graph;
use crate::spectral::{normalized_laplacian, symmetric_eigendecomposition};
use crate::temporal::TimeSignal;

const MAX_LAYOUT_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_nodes: usize,
    pub n_times: usize,
    pub area_side: f64,
    pub knn_k: usize,
    pub energy: f64,
    /// Number of eigenvectors after the first spanning `x_1`.
    pub low_freq_count: usize,
    /// Standard deviation of the entries of `f_t`.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_nodes: 100,
            n_times: 200,
            area_side: 100.0,
            knn_k: 5,
            energy: 1e4,
            low_freq_count: 10,
            noise_scale: 0.2,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 {
            return Err(Error::config("knn_k", "must be at least 1"));
        }
        if self.n_nodes < self.knn_k + 1 {
            return Err(Error::config("n_nodes", format!("must be at least knn_k + 1 = {}", self.knn_k + 1)));
        }
        if self.n_times < 2 {
            return Err(Error::config("n_times", "must be at least 2"));
        }
        if !(self.energy.is_finite() && self.energy > 0.0) {
            return Err(Error::config("energy", "must be positive"));
        }
        if !(self.area_side.is_finite() && self.area_side > 0.0) {
            return Err(Error::config("area_side", "must be positive"));
        }
        if self.low_freq_count == 0 || self.low_freq_count >= self.n_nodes {
            return Err(Error::config("low_freq_count", format!("must lie in 1..{}", self.n_nodes)));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::config("noise_scale", "must be nonnegative"));
        }
        Ok(())
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_nodes;

    let mut last_err = None;
    let mut graph = None;
    for _ in 0..MAX_LAYOUT_ATTEMPTS {
        let coords: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random::<f64>() * cfg.area_side, rng.random::<f64>() * cfg.area_side])
            .collect();
        match build_knn_graph(&coords, cfg.knn_k, None) {
            Ok(g) => {
                graph = Some(g);
                break;
            }
            Err(e @ (Error::Disconnected { .. } | Error::DuplicatePoint(..))) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let graph = match graph {
        Some(g) => g,
        None => return Err(last_err.expect("at least one attempt")),
    };

    let bundle = normalized_laplacian(&graph)?;
    let eig = symmetric_eigendecomposition(&bundle.laplacian)?;
    let u = &eig.vectors;

    let coeffs: Array1<f64> = (0..cfg.low_freq_count).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut x1 = u.slice(s![.., 1..1 + cfg.low_freq_count]).dot(&coeffs);
    let norm2 = x1.dot(&x1);
    x1 *= (cfg.energy / norm2).sqrt();

    // U diag(0, λ₂^{-1/2}, …, λ_N^{-1/2}) Uᵀ
    let inv_sqrt: Array1<f64> = eig
        .values
        .iter()
        .enumerate()
        .map(|(i, &lam)| if i == 0 || lam <= 0.0 { 0.0 } else { 1.0 / lam.sqrt() })
        .collect();
    let transform = (u * &inv_sqrt).dot(&u.t());

    let m = cfg.n_times;
    let mut values = Array2::zeros((n, m));
    values.column_mut(0).assign(&x1);
    for t in 1..m {
        let f: Array1<f64> = (0..n).map(|_| cfg.noise_scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let step = transform.dot(&f);
        let next = &values.column(t - 1) + &step;
        values.column_mut(t).assign(&next);
    }
    Dataset::new("synthetic", graph, TimeSignal::new(values)?, cfg.knn_k)
}
