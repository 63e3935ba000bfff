//! Compressed sparse row storage for the graph operators.
//!
//! Graphs are stored densely, but k-NN Laplacians have only a handful of
//! nonzeros per row, so the solver and trainer hot loops multiply through a
//! CSR copy. [`MatOp`] lets the smoothness functionals accept either form.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// A square matrix acting on the left of `N × F` blocks.
pub trait MatOp {
    fn dim(&self) -> usize;

    /// `self · x` for an `N × F` block `x`.
    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64>;
}

impl MatOp for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.dot(&x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Copies the exact nonzeros of a square dense matrix.
    pub fn from_dense(a: &Array2<f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(Error::shape("CsrMatrix::from_dense", "square matrix", format!("{rows}x{cols}")));
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in a.axis_iter(Axis(0)) {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n: rows,
            indptr,
            indices,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out[[i, self.indices[p]]] = self.values[p];
            }
        }
        out
    }
}

impl MatOp for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "CsrMatrix::apply row mismatch");
        let mut out = Array2::zeros(x.raw_dim());
        for (i, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out_row.scaled_add(self.values[p], &x.row(self.indices[p]));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csr_matches_dense_product() {
        let a = array![[2.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 3.0]];
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let csr = CsrMatrix::from_dense(&a).unwrap();
        assert_eq!(csr.nnz(), 5);
        assert_eq!(csr.apply(x.view()), a.dot(&x));
        assert_eq!(csr.to_dense(), a);
    }

    #[test]
    fn rejects_non_square() {
        assert!(CsrMatrix::from_dense(&Array2::zeros((2, 3))).is_err());
    }
}
