//! Temporal difference operator and graph smoothness functionals.
//!
//! The first-difference matrix `D_h` (size `M × (M−1)`) is never formed:
//! `X·D_h` is column subtraction and `X·D_h·D_hᵀ` a three-point stencil.

use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::MatOp;

/// An `N × M` node-by-time signal matrix with `M ≥ 2` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal(Array2<f64>);

impl TimeSignal {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.ncols() < 2 {
            return Err(Error::shape("TimeSignal", "at least 2 time steps", values.ncols()));
        }
        if values.nrows() == 0 {
            return Err(Error::shape("TimeSignal", "at least 1 node", 0));
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("signal entry ({i}, {j})")));
        }
        Ok(Self(values))
    }

    pub fn n_nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl AsRef<Array2<f64>> for TimeSignal {
    fn as_ref(&self) -> &Array2<f64> {
        &self.0
    }
}

/// `X·D_h`: column `s` is `x_{s+1} − x_s`.
pub fn temporal_difference(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let m = x.ncols();
    if m < 2 {
        return Err(Error::shape("temporal_difference", "at least 2 time steps", m));
    }
    Ok(&x.slice(s![.., 1..]) - &x.slice(s![.., ..m - 1]))
}

/// `Δ·D_hᵀ` for an `N × (M−1)` block `Δ`, giving an `N × M` result.
pub fn difference_adjoint(delta: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, k) = delta.dim();
    let mut out = Array2::zeros((n, k + 1));
    out.slice_mut(s![.., ..k]).assign(&(-&delta));
    let mut tail = out.slice_mut(s![.., 1..]);
    tail += &delta;
    out
}

/// `X·D_h·D_hᵀ` via the boundary-corrected second-difference stencil.
pub fn difference_gram(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (n, m) = x.dim();
    if m < 2 {
        return Err(Error::shape("difference_gram", "at least 2 time steps", m));
    }
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        let row = x.row(i);
        let mut out_row = out.row_mut(i);
        out_row[0] = row[0] - row[1];
        for t in 1..m - 1 {
            out_row[t] = 2.0 * row[t] - row[t - 1] - row[t + 1];
        }
        out_row[m - 1] = row[m - 1] - row[m - 2];
    }
    Ok(out)
}

/// Discrete p-Dirichlet form
/// `S_p(x) = (1/p) Σ_i [Σ_{j∈N_i} A(i,j)(x_j − x_i)²]^{p/2}`.
pub fn p_dirichlet(x: &Array1<f64>, g: &Graph, p: f64) -> Result<f64> {
    if x.len() != g.n() {
        return Err(Error::shape("p_dirichlet", g.n(), x.len()));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::config("p", format!("must be positive, got {p}")));
    }
    let a = g.adjacency();
    let total: f64 = (0..g.n())
        .map(|i| {
            let local: f64 = g
                .neighbors(i)
                .map(|j| a[[i, j]] * (x[j] - x[i]).powi(2))
                .sum();
            local.powf(p / 2.0)
        })
        .sum();
    Ok(total / p)
}

/// `xᵀ L x` for a single graph signal.
pub fn quadratic_form_vector(x: &Array1<f64>, l: &Array2<f64>) -> Result<f64> {
    if l.nrows() != l.ncols() || l.nrows() != x.len() {
        return Err(Error::shape("quadratic_form_vector", format!("{0}x{0} operator", x.len()), format!("{:?}", l.dim())));
    }
    Ok(x.dot(&l.dot(x)))
}

/// `tr(Xᵀ L X) = Σ_s x_sᵀ L x_s`.
pub fn quadratic_form<Op: MatOp + ?Sized>(x: ArrayView2<'_, f64>, l: &Op) -> Result<f64> {
    if l.dim() != x.nrows() {
        return Err(Error::shape("quadratic_form", l.dim(), x.nrows()));
    }
    let lx = l.apply(x);
    Ok(Zip::from(&x).and(&lx).fold(0.0, |acc, a, b| acc + a * b))
}

/// Sobolev smoothness `tr((X D_h)ᵀ (L + εI) X D_h)`.
pub fn sobolev_smoothness<Op: MatOp + ?Sized>(x: ArrayView2<'_, f64>, l: &Op, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::config("epsilon", format!("must be nonnegative, got {epsilon}")));
    }
    let diff = temporal_difference(x)?;
    let graph_term = quadratic_form(diff.view(), l)?;
    let shift_term = diff.iter().map(|v| v * v).sum::<f64>();
    Ok(graph_term + epsilon * shift_term)
}

/// Gradient of [`sobolev_smoothness`] with respect to `X`:
/// `2 (L + εI) X D_h D_hᵀ`.
pub(crate) fn sobolev_gradient<Op: MatOp + ?Sized>(x: ArrayView2<'_, f64>, l: &Op, epsilon: f64) -> Result<Array2<f64>> {
    let gram = difference_gram(x)?;
    let mut g = l.apply(gram.view());
    g.scaled_add(epsilon, &gram);
    g *= 2.0;
    Ok(g)
}

#[cfg(test)]
pub(crate) mod oracle {
    use ndarray::Array2;

    /// Materialized `M × (M−1)` first-difference matrix.
    pub fn difference_matrix(m: usize) -> Array2<f64> {
        let mut d = Array2::zeros((m, m - 1));
        for j in 0..m - 1 {
            d[[j, j]] = -1.0;
            d[[j + 1, j]] = 1.0;
        }
        d
    }
}
