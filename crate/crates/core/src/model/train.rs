//! Full-batch training shared by the cascade model and the GCN baseline.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamW;
use super::gcn::GcnModel;
use super::loss::{loss_gradient, loss};
use super::timegnn::CascadeModel;
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mask::SamplingMask;
use crate::sparse::{CsrMatrix, MatOp};
use crate::spectral::{renormalized_adjacency, LaplacianBundle};
use crate::temporal::temporal_difference;

const DIVERGENCE_LIMIT: f64 = 1e12;
const SPLIT_STREAM: u64 = 0x7a11_da7a_5b11_7000;

/// Loss target for [`Network::loss_and_gradient`].
pub struct LossTerms<'a, Op: MatOp + ?Sized> {
    pub target: &'a Array2<f64>,
    pub train: &'a [(usize, usize)],
    pub laplacian: &'a Op,
    pub lambda: f64,
    pub epsilon: f64,
}

/// A differentiable model whose gradient has the same shape as itself.
pub trait Network: Clone + Sized {
    type Cache;

    fn forward_cached<P: MatOp + ?Sized>(&self, input: &Array2<f64>, propagation: &P) -> Result<(Array2<f64>, Self::Cache)>;

    fn backward<P: MatOp + ?Sized>(&self, cache: &Self::Cache, upstream: Array2<f64>, propagation: &P) -> Result<Self>;

    fn flat_params(&self) -> Vec<f64>;

    fn set_flat_params(&mut self, flat: &[f64]);

    fn forward<P: MatOp + ?Sized>(&self, input: &Array2<f64>, propagation: &P) -> Result<Array2<f64>> {
        self.forward_cached(input, propagation).map(|(out, _)| out)
    }

    fn loss_and_gradient<P: MatOp + ?Sized, L: MatOp + ?Sized>(
        &self,
        input: &Array2<f64>,
        propagation: &P,
        terms: &LossTerms<'_, L>,
    ) -> Result<(f64, Self)> {
        let (out, cache) = self.forward_cached(input, propagation)?;
        let (value, upstream) = loss_gradient(&out, terms.target, terms.train, terms.laplacian, terms.lambda, terms.epsilon)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok((value, self.backward(&cache, upstream, propagation)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Training set; `None` means every sampled entry.
    pub train_indices: Option<Vec<(usize, usize)>>,
    /// Share of the training set held out for validation RMSE.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            weight_decay: 1e-4,
            lambda: 1e-4,
            epsilon: 0.05,
            epochs: 5000,
            seed: 0,
            train_indices: None,
            validation_fraction: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be nonnegative"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("lambda", "must be nonnegative"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config("epsilon", "must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Splits the training set into (train, validation) entries.
    fn split(&self, mask: &SamplingMask) -> Result<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
        let mut s = match &self.train_indices {
            Some(idx) => {
                if let Some(&(i, j)) = idx.iter().find(|&&(i, j)| {
                    let (n, m) = mask.dim();
                    i >= n || j >= m || !mask.is_sampled(i, j)
                }) {
                    return Err(Error::config("train_indices", format!("entry ({i}, {j}) is not sampled")));
                }
                idx.clone()
            }
            None => mask.sampled_indices().to_vec(),
        };
        if s.is_empty() {
            return Err(Error::EmptySet("training set"));
        }
        let held = (self.validation_fraction * s.len() as f64).floor() as usize;
        if held == 0 {
            return Ok((s, Vec::new()));
        }
        let held = held.min(s.len() - 1);
        s.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed ^ SPLIT_STREAM));
        let val = s.split_off(s.len() - held);
        s.sort_unstable();
        Ok((s, val))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<N> {
    pub model: N,
    pub reconstruction: Array2<f64>,
    /// Loss at the start of each epoch.
    pub loss_history: Vec<f64>,
    pub validation_indices: Vec<(usize, usize)>,
    /// RMSE of the final reconstruction on the validation entries.
    pub validation_rmse: Option<f64>,
}

/// Trains `init` on `target` restricted to the configured training set.
pub fn train_network<N, P, L>(
    init: N,
    input: &Array2<f64>,
    propagation: &P,
    target: &Array2<f64>,
    mask: &SamplingMask,
    laplacian: &L,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<N>>
where
    N: Network,
    P: MatOp + ?Sized,
    L: MatOp + ?Sized,
{
    cfg.validate()?;
    if target.dim() != mask.dim() {
        return Err(Error::shape("train target vs mask", format!("{:?}", mask.dim()), format!("{:?}", target.dim())));
    }
    let (train, validation) = cfg.split(mask)?;
    let terms = LossTerms {
        target,
        train: &train,
        laplacian,
        lambda: cfg.lambda,
        epsilon: cfg.epsilon,
    };
    let mut model = init;
    let mut params = model.flat_params();
    let mut opt = AdamW::new(params.len(), cfg.learning_rate, cfg.weight_decay);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (value, grad) = match model.loss_and_gradient(input, propagation, &terms) {
            Ok(v) => v,
            Err(Error::NonFinite(what)) => {
                log::warn!("training diverged at epoch {epoch}: non-finite {what}");
                return Err(Error::Divergence { epoch, loss: f64::NAN });
            }
            Err(e) => return Err(e),
        };
        if !(value <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { epoch, loss: value });
        }
        history.push(value);
        opt.step(&mut params, &grad.flat_params());
        model.set_flat_params(&params);
    }
    let reconstruction = match model.forward(input, propagation) {
        Ok(x) => x,
        Err(Error::NonFinite(_)) => return Err(Error::Divergence { epoch: cfg.epochs, loss: f64::NAN }),
        Err(e) => return Err(e),
    };
    let final_loss = loss(&reconstruction, target, &train, laplacian, cfg.lambda, cfg.epsilon)?;
    if !(final_loss <= DIVERGENCE_LIMIT) {
        return Err(Error::Divergence { epoch: cfg.epochs, loss: final_loss });
    }
    let validation_rmse = (!validation.is_empty()).then(|| {
        let sse: f64 = validation.iter().map(|&(i, j)| (reconstruction[[i, j]] - target[[i, j]]).powi(2)).sum();
        (sse / validation.len() as f64).sqrt()
    });
    Ok(TrainOutcome {
        model,
        reconstruction,
        loss_history: history,
        validation_indices: validation,
        validation_rmse,
    })
}

fn masked_input(observed: &Array2<f64>, mask: &SamplingMask) -> Result<Array2<f64>> {
    let masked = mask.apply(observed)?;
    temporal_difference(masked.view())
}

/// Trains the cascade model on `(J ∘ X) D_h` with `L̂` as propagation operator.
pub fn train_timegnn(
    observed: &Array2<f64>,
    mask: &SamplingMask,
    bundle: &LaplacianBundle,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome<CascadeModel>> {
    check_nodes(observed, bundle.n())?;
    let input = masked_input(observed, mask)?;
    let init = CascadeModel::init(model_cfg, observed.ncols(), train_cfg.seed)?;
    train_network(init, &input, bundle.scaled_csr(), observed, mask, bundle.laplacian_csr(), train_cfg)
}

/// Trains the GCN baseline with the same input, loss and optimizer.
pub fn train_gcn(
    observed: &Array2<f64>,
    mask: &SamplingMask,
    graph: &Graph,
    bundle: &LaplacianBundle,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome<GcnModel>> {
    check_nodes(observed, graph.n())?;
    check_nodes(observed, bundle.n())?;
    let input = masked_input(observed, mask)?;
    let a_hat = CsrMatrix::from_dense(&renormalized_adjacency(graph))?;
    let init = GcnModel::init(model_cfg, observed.ncols(), train_cfg.seed)?;
    train_network(init, &input, &a_hat, observed, mask, bundle.laplacian_csr(), train_cfg)
}

fn check_nodes(observed: &Array2<f64>, n: usize) -> Result<()> {
    if observed.nrows() != n {
        return Err(Error::shape("observed rows vs graph nodes", n, observed.nrows()));
    }
    Ok(())
}
