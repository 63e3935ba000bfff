use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::MatOp;

/// `Z⁽¹⁾ = X`, `Z⁽²⁾ = L̂X`, `Z⁽ᵏ⁾ = 2L̂Z⁽ᵏ⁻¹⁾ − Z⁽ᵏ⁻²⁾`, i.e. `Z⁽ᵏ⁾ = T_{k−1}(L̂)X`.
pub fn cheb_basis<Op: MatOp + ?Sized>(x: &Array2<f64>, scaled_laplacian: &Op, order: usize) -> Result<Vec<Array2<f64>>> {
    if order == 0 {
        return Err(Error::config("order", "Chebyshev order must be at least 1"));
    }
    if scaled_laplacian.dim() != x.nrows() {
        return Err(Error::shape("cheb_basis", scaled_laplacian.dim(), x.nrows()));
    }
    let mut z = Vec::with_capacity(order);
    z.push(x.clone());
    if order >= 2 {
        z.push(scaled_laplacian.apply(x.view()));
    }
    for k in 2..order {
        let mut next = scaled_laplacian.apply(z[k - 1].view());
        next *= 2.0;
        next -= &z[k - 2];
        z.push(next);
    }
    Ok(z)
}

/// Reverse pass of [`cheb_basis`]: given `∂ℓ/∂Z⁽ᵏ⁾` for every `k`, returns
/// `∂ℓ/∂X` (using the symmetry of `L̂`).
pub(crate) fn cheb_basis_adjoint<Op: MatOp + ?Sized>(mut adj: Vec<Array2<f64>>, scaled_laplacian: &Op) -> Array2<f64> {
    let order = adj.len();
    for k in (2..order).rev() {
        let back = scaled_laplacian.apply(adj[k].view());
        let (head, tail) = adj.split_at_mut(k);
        head[k - 1].scaled_add(2.0, &back);
        head[k - 2] -= &tail[0];
    }
    if order >= 2 {
        let back = scaled_laplacian.apply(adj[1].view());
        adj[0] += &back;
    }
    adj.swap_remove(0)
}
