use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cascade::CascadeLayerParams;
use super::train::Network;
use super::{Activation, ModelConfig};
use crate::error::{Error, Result};
use crate::sparse::MatOp;

/// Stacked cascade layers `M−1 → H → … → H → M`; the activation follows
/// every layer but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub layers: Vec<CascadeLayerParams>,
    pub activation: Activation,
    pub seed: u64,
}

pub struct CascadeCache {
    layers: Vec<LayerCache>,
}

struct LayerCache {
    basis: Vec<Array2<f64>>,
    pre_activation: Option<Array2<f64>>,
}

impl CascadeModel {
    pub fn new(layers: Vec<CascadeLayerParams>, activation: Activation, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("layers", "model needs at least one layer"));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape("CascadeModel layer chaining", format!("layer {} in_dim {}", l + 1, pair[0].out_dim()), pair[1].in_dim()));
            }
        }
        let model = Self { layers, activation, seed };
        if model.n_times() != model.input_dim() + 1 {
            return Err(Error::shape("CascadeModel dims", format!("output width = input width + 1 = {}", model.input_dim() + 1), model.n_times()));
        }
        Ok(model)
    }

    /// Seeded Glorot initialization for signals of `n_times` steps.
    pub fn init(cfg: &ModelConfig, n_times: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if n_times < 2 {
            return Err(Error::config("n_times", "must be at least 2"));
        }
        let dims = cfg.dims(n_times);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|d| CascadeLayerParams::glorot(d[0], d[1], cfg.alpha, &mut rng))
            .collect();
        Self::new(layers, cfg.activation, seed)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn n_times(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.out_dim()));
        d
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| l.zeros_like()).collect(),
            activation: self.activation,
            seed: self.seed,
        }
    }
}

impl Network for CascadeModel {
    type Cache = CascadeCache;

    fn forward_cached<P: MatOp + ?Sized>(&self, input: &Array2<f64>, propagation: &P) -> Result<(Array2<f64>, CascadeCache)> {
        if input.ncols() != self.input_dim() {
            return Err(Error::shape("model_forward input width", self.input_dim(), input.ncols()));
        }
        let last = self.layers.len() - 1;
        let mut h = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let (mut out, basis) = layer.forward_cached(&h, propagation)?;
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("cascade layer {} output", l + 1)));
            }
            let pre_activation = if l < last && self.activation != Activation::Linear {
                let pre = out.clone();
                self.activation.apply(&mut out);
                Some(pre)
            } else {
                None
            };
            caches.push(LayerCache { basis, pre_activation });
            h = out;
        }
        Ok((h, CascadeCache { layers: caches }))
    }

    fn backward<P: MatOp + ?Sized>(&self, cache: &CascadeCache, upstream: Array2<f64>, propagation: &P) -> Result<Self> {
        let mut grad = self.zeros_like();
        let mut g = upstream;
        for l in (0..self.layers.len()).rev() {
            let lc = &cache.layers[l];
            if let Some(pre) = &lc.pre_activation {
                self.activation.backprop(pre, &mut g);
            }
            let (layer_grad, dh) = self.layers[l].backward(&lc.basis, &g, propagation);
            let mut finite = true;
            layer_grad.for_each_param(|v| finite &= v.is_finite());
            if !finite || dh.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("cascade layer {} gradient", l + 1)));
            }
            grad.layers[l] = layer_grad;
            g = dh;
        }
        Ok(grad)
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            layer.for_each_param(|v| out.push(v));
        }
        out
    }

    fn set_flat_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for layer in &mut self.layers {
            layer.for_each_param_mut(|v| *v = *it.next().expect("flat parameter vector too short"));
        }
        assert!(it.next().is_none(), "flat parameter vector too long");
    }
}

/// Runs the cascade stack on `(J ∘ X) D_h`, producing an `N × M` signal.
pub fn model_forward<P: MatOp + ?Sized>(input_diff: &Array2<f64>, model: &CascadeModel, scaled_laplacian: &P) -> Result<Array2<f64>> {
    model.forward(input_diff, scaled_laplacian)
}
