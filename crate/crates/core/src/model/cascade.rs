//! One cascade layer: `H' = Σ_{ρ=1..α} μ_ρ Σ_{k=1..ρ} Z⁽ᵏ⁾ W⁽ᵏ⁾_ρ`.

use ndarray::Array2;
use rand::Rng;

use super::chebyshev::{cheb_basis, cheb_basis_adjoint};
use crate::error::{Error, Result};
use crate::sparse::MatOp;

/// Branch `ρ` (0-based index `ρ−1`) holds `ρ` weight matrices, one per
/// Chebyshev order, all of shape `in_dim × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeLayerParams {
    pub weights: Vec<Vec<Array2<f64>>>,
    pub branch_scalars: Vec<f64>,
}

impl CascadeLayerParams {
    pub fn new(weights: Vec<Vec<Array2<f64>>>, branch_scalars: Vec<f64>) -> Result<Self> {
        let alpha = weights.len();
        if alpha == 0 {
            return Err(Error::config("alpha", "cascade layer needs at least one branch"));
        }
        if branch_scalars.len() != alpha {
            return Err(Error::shape("CascadeLayerParams branch scalars", alpha, branch_scalars.len()));
        }
        let dim = weights[0].first().map(|w| w.dim()).ok_or_else(|| Error::shape("CascadeLayerParams branch 1", 1, 0))?;
        for (b, branch) in weights.iter().enumerate() {
            if branch.len() != b + 1 {
                return Err(Error::shape("CascadeLayerParams branch size", b + 1, branch.len()));
            }
            if let Some(w) = branch.iter().find(|w| w.dim() != dim) {
                return Err(Error::shape("CascadeLayerParams weight", format!("{dim:?}"), format!("{:?}", w.dim())));
            }
        }
        Ok(Self { weights, branch_scalars })
    }

    /// Glorot-uniform weights, `μ_ρ = 1/α`.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, alpha: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (1..=alpha)
            .map(|rho| {
                (0..rho)
                    .map(|_| Array2::from_shape_fn((in_dim, out_dim), |_| rng.random_range(-limit..=limit)))
                    .collect()
            })
            .collect();
        Self {
            weights,
            branch_scalars: vec![1.0 / alpha as f64; alpha],
        }
    }

    pub(crate) fn zeros_like(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|b| b.iter().map(|w| Array2::zeros(w.raw_dim())).collect()).collect(),
            branch_scalars: vec![0.0; self.alpha()],
        }
    }

    pub fn alpha(&self) -> usize {
        self.weights.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights[0][0].nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights[0][0].ncols()
    }

    /// `W̃_k = Σ_{ρ≥k} μ_ρ W⁽ᵏ⁾_ρ`, so the layer output is `Σ_k Z⁽ᵏ⁾ W̃_k`.
    fn effective_weights(&self) -> Vec<Array2<f64>> {
        (0..self.alpha())
            .map(|k| {
                let mut acc = Array2::zeros((self.in_dim(), self.out_dim()));
                for rho in k..self.alpha() {
                    acc.scaled_add(self.branch_scalars[rho], &self.weights[rho][k]);
                }
                acc
            })
            .collect()
    }

    pub(crate) fn for_each_param(&self, mut f: impl FnMut(f64)) {
        for branch in &self.weights {
            for w in branch {
                w.iter().for_each(|&v| f(v));
            }
        }
        self.branch_scalars.iter().for_each(|&v| f(v));
    }

    pub(crate) fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for branch in &mut self.weights {
            for w in branch {
                w.iter_mut().for_each(&mut f);
            }
        }
        self.branch_scalars.iter_mut().for_each(f);
    }

    pub(crate) fn forward_cached<Op: MatOp + ?Sized>(&self, h_in: &Array2<f64>, scaled: &Op) -> Result<(Array2<f64>, Vec<Array2<f64>>)> {
        if h_in.ncols() != self.in_dim() {
            return Err(Error::shape("cascade_forward input width", self.in_dim(), h_in.ncols()));
        }
        let z = cheb_basis(h_in, scaled, self.alpha())?;
        let mut out = Array2::zeros((h_in.nrows(), self.out_dim()));
        for (zk, wk) in z.iter().zip(self.effective_weights()) {
            out += &zk.dot(&wk);
        }
        Ok((out, z))
    }

    /// Parameter gradients and `∂ℓ/∂H_in` given `∂ℓ/∂H_out`.
    pub(crate) fn backward<Op: MatOp + ?Sized>(&self, z: &[Array2<f64>], upstream: &Array2<f64>, scaled: &Op) -> (Self, Array2<f64>) {
        let effective = self.effective_weights();
        let eff_grads: Vec<Array2<f64>> = z.iter().map(|zk| zk.t().dot(upstream)).collect();
        let mut grad = self.zeros_like();
        for rho in 0..self.alpha() {
            let mu = self.branch_scalars[rho];
            let mut dmu = 0.0;
            for k in 0..=rho {
                grad.weights[rho][k] = &eff_grads[k] * mu;
                dmu += (&self.weights[rho][k] * &eff_grads[k]).sum();
            }
            grad.branch_scalars[rho] = dmu;
        }
        let dz: Vec<Array2<f64>> = effective.iter().map(|wk| upstream.dot(&wk.t())).collect();
        (grad, cheb_basis_adjoint(dz, scaled))
    }
}

/// Applies one cascade layer (no activation).
pub fn cascade_forward<Op: MatOp + ?Sized>(h_in: &Array2<f64>, params: &CascadeLayerParams, scaled_laplacian: &Op) -> Result<Array2<f64>> {
    params.forward_cached(h_in, scaled_laplacian).map(|(out, _)| out)
}
