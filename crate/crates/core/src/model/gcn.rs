//! First-order GCN baseline: `H' = Â H W` with the renormalized adjacency.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::Network;
use super::{Activation, ModelConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::renormalized_adjacency;
use crate::sparse::MatOp;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub weights: Vec<Array2<f64>>,
    pub activation: Activation,
    pub seed: u64,
}

pub struct GcnCache {
    propagated: Vec<Array2<f64>>,
    pre_activation: Vec<Option<Array2<f64>>>,
}

impl GcnModel {
    pub fn new(weights: Vec<Array2<f64>>, activation: Activation, seed: u64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("layers", "model needs at least one layer"));
        }
        for pair in weights.windows(2) {
            if pair[0].ncols() != pair[1].nrows() {
                return Err(Error::shape("GcnModel layer chaining", pair[0].ncols(), pair[1].nrows()));
            }
        }
        Ok(Self { weights, activation, seed })
    }

    pub fn init(cfg: &ModelConfig, n_times: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if n_times < 2 {
            return Err(Error::config("n_times", "must be at least 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = cfg
            .dims(n_times)
            .windows(2)
            .map(|d| {
                let limit = (6.0 / (d[0] + d[1]) as f64).sqrt();
                Array2::from_shape_fn((d[0], d[1]), |_| rng.random_range(-limit..=limit))
            })
            .collect();
        Self::new(weights, cfg.activation, seed)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.weights[0].nrows()];
        d.extend(self.weights.iter().map(|w| w.ncols()));
        d
    }
}

impl Network for GcnModel {
    type Cache = GcnCache;

    fn forward_cached<P: MatOp + ?Sized>(&self, input: &Array2<f64>, propagation: &P) -> Result<(Array2<f64>, GcnCache)> {
        if input.ncols() != self.weights[0].nrows() {
            return Err(Error::shape("gcn_forward input width", self.weights[0].nrows(), input.ncols()));
        }
        if propagation.dim() != input.nrows() {
            return Err(Error::shape("gcn_forward propagation", propagation.dim(), input.nrows()));
        }
        let last = self.weights.len() - 1;
        let mut h = input.clone();
        let mut cache = GcnCache {
            propagated: Vec::new(),
            pre_activation: Vec::new(),
        };
        for (l, w) in self.weights.iter().enumerate() {
            let ah = propagation.apply(h.view());
            let mut out = ah.dot(w);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gcn layer {} output", l + 1)));
            }
            let pre = if l < last && self.activation != Activation::Linear {
                let pre = out.clone();
                self.activation.apply(&mut out);
                Some(pre)
            } else {
                None
            };
            cache.propagated.push(ah);
            cache.pre_activation.push(pre);
            h = out;
        }
        Ok((h, cache))
    }

    fn backward<P: MatOp + ?Sized>(&self, cache: &GcnCache, upstream: Array2<f64>, propagation: &P) -> Result<Self> {
        let mut grads = Vec::with_capacity(self.weights.len());
        let mut g = upstream;
        for l in (0..self.weights.len()).rev() {
            if let Some(pre) = &cache.pre_activation[l] {
                self.activation.backprop(pre, &mut g);
            }
            let dw = cache.propagated[l].t().dot(&g);
            let dh = propagation.apply(g.dot(&self.weights[l].t()).view());
            if dw.iter().chain(dh.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gcn layer {} gradient", l + 1)));
            }
            grads.push(dw);
            g = dh;
        }
        grads.reverse();
        Ok(Self {
            weights: grads,
            activation: self.activation,
            seed: self.seed,
        })
    }

    fn flat_params(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|w| w.iter().copied()).collect()
    }

    fn set_flat_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v = *it.next().expect("flat parameter vector too short"));
        }
        assert!(it.next().is_none(), "flat parameter vector too long");
    }
}

/// GCN forward pass with `Â` built from `g`.
pub fn gcn_forward(input_diff: &Array2<f64>, params: &GcnModel, g: &Graph) -> Result<Array2<f64>> {
    params.forward(input_diff, &renormalized_adjacency(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::loss::loss;
    use crate::model::testutil::random;
    use crate::model::train::LossTerms;
    use crate::spectral::normalized_laplacian;
    use ndarray::array;

    fn random_graph(n: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            if let Ok(g) = crate::graph::build_knn_graph(&pts, 3, None) {
                return g;
            }
        }
    }

    #[test]
    fn single_node_single_layer_is_linear_map() {
        let g = Graph::from_adjacency(array![[0.0]], None).unwrap();
        let w = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let m = GcnModel::new(vec![w.clone()], Activation::Relu, 0).unwrap();
        let x = array![[0.5, -1.0]];
        assert_eq!(gcn_forward(&x, &m, &g).unwrap(), x.dot(&w));
    }

    #[test]
    fn zero_weights_zero_output() {
        let g = random_graph(6, 1);
        let mut m = GcnModel::init(&ModelConfig::default(), 5, 2).unwrap();
        m.weights.iter_mut().for_each(|w| w.fill(0.0));
        let x = random(6, 4, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(gcn_forward(&x, &m, &g).unwrap(), Array2::<f64>::zeros((6, 5)));
    }

    #[test]
    fn gradients_match_central_differences() {
        let g = random_graph(9, 4);
        let b = normalized_laplacian(&g).unwrap();
        let a_hat = renormalized_adjacency(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = GcnModel::init(
            &ModelConfig {
                layers: 2,
                hidden: 3,
                ..ModelConfig::default()
            },
            6,
            7,
        )
        .unwrap();
        let input = random(9, 5, &mut rng);
        let target = random(9, 6, &mut rng);
        let s: Vec<(usize, usize)> = (0..9).flat_map(|i| (0..6).map(move |j| (i, j))).filter(|&(i, j)| (i * 7 + j) % 4 != 0).collect();
        let terms = LossTerms {
            target: &target,
            train: &s,
            laplacian: &b.laplacian,
            lambda: 1e-3,
            epsilon: 0.05,
        };
        let (_, grad) = m.loss_and_gradient(&input, &a_hat, &terms).unwrap();
        let analytic = grad.flat_params();
        let base = m.flat_params();
        let h = 1e-5;
        for i in 0..base.len() {
            let eval = |delta: f64| {
                let mut p = base.clone();
                p[i] += delta;
                let mut mm = m.clone();
                mm.set_flat_params(&p);
                loss(&mm.forward(&input, &a_hat).unwrap(), &target, &s, &b.laplacian, 1e-3, 0.05).unwrap()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-8);
            assert!(rel < 1e-4, "param {i}: fd {fd} analytic {}", analytic[i]);
        }
    }
}
