//! Normalized Laplacian, spectral radius estimate, dense symmetric
//! eigendecomposition.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::CsrMatrix;

const LANCZOS_SEED: u64 = 0x5eed_1a7b_da3a_0001;
const RITZ_TOL: f64 = 1e-9;
const LANCZOS_MAX_STEPS: usize = 1000;
const LAMBDA_MAX_FLOOR: f64 = 1e-12;
const LAMBDA_MAX_FALLBACK: f64 = 2.0;

const JACOBI_THRESHOLD: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Normalized Laplacian of a graph together with its Chebyshev rescaling
/// `L̂ = 2L/λ_max − I`.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub laplacian: Array2<f64>,
    pub lambda_max: f64,
    pub scaled: Array2<f64>,
    laplacian_csr: CsrMatrix,
    scaled_csr: CsrMatrix,
}

impl LaplacianBundle {
    /// Bundles a symmetric Laplacian with its estimated spectral radius.
    pub fn from_laplacian(laplacian: Array2<f64>) -> Result<Self> {
        let lambda_max = estimate_lambda_max(&laplacian)?;
        Self::with_lambda_max(laplacian, lambda_max)
    }

    pub fn with_lambda_max(laplacian: Array2<f64>, lambda_max: f64) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::config("lambda_max", format!("must be positive, got {lambda_max}")));
        }
        let n = laplacian.nrows();
        let scaled = &laplacian * (2.0 / lambda_max) - Array2::<f64>::eye(n);
        let laplacian_csr = CsrMatrix::from_dense(&laplacian)?;
        let scaled_csr = CsrMatrix::from_dense(&scaled)?;
        Ok(Self {
            laplacian,
            lambda_max,
            scaled,
            laplacian_csr,
            scaled_csr,
        })
    }

    pub fn n(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn laplacian_csr(&self) -> &CsrMatrix {
        &self.laplacian_csr
    }

    pub fn scaled_csr(&self) -> &CsrMatrix {
        &self.scaled_csr
    }
}

/// `L = I − D^{-1/2} A D^{-1/2}` with `D = diag(A·1)`.
pub fn normalized_laplacian(g: &Graph) -> Result<LaplacianBundle> {
    let degrees = g.degrees();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree(i));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let a = g.adjacency();
    let n = g.n();
    let laplacian = Array2::from_shape_fn((n, n), |(i, j)| {
        let off = a[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - off
        } else {
            -off
        }
    });
    LaplacianBundle::from_laplacian(laplacian)
}

/// `Â = D̃^{-1/2}(A + I)D̃^{-1/2}` with `D̃ = diag((A + I)·1)`, the GCN
/// propagation matrix.
pub fn renormalized_adjacency(g: &Graph) -> Array2<f64> {
    let n = g.n();
    let a_tilde = g.adjacency() + &Array2::<f64>::eye(n);
    let inv_sqrt: Vec<f64> = a_tilde.sum_axis(Axis(1)).iter().map(|d| 1.0 / d.sqrt()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| a_tilde[[i, j]] * inv_sqrt[i] * inv_sqrt[j])
}

fn check_symmetric(m: &Array2<f64>) -> Result<()> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::shape("symmetric matrix", "square", format!("{rows}x{cols}")));
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0);
    for i in 0..rows {
        for j in (i + 1)..rows {
            if (m[[i, j]] - m[[j, i]]).abs() > tol {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symmetric matrix".into()));
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric PSD matrix.
///
/// Runs Lanczos with full reorthogonalization from a fixed seeded vector (the
/// Krylov space of power iteration, so never worse than power iteration at
/// equal step count) and stops once the top Ritz value changes by less than
/// `1e-9` relative. If 1000 steps pass without that, logs a warning and
/// returns the normalized-Laplacian bound 2.
pub fn estimate_lambda_max(l: &Array2<f64>) -> Result<f64> {
    check_symmetric(l)?;
    let n = l.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut q: Array1<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    q /= q.dot(&q).sqrt();

    let scale = l.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(LAMBDA_MAX_FLOOR);
    }
    let mut basis: Vec<Array1<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut previous = f64::NAN;
    for _ in 0..LANCZOS_MAX_STEPS.min(n) {
        let mut w = l.dot(&q);
        let alpha = q.dot(&w);
        basis.push(q);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.scaled_add(-c, b);
            }
        }
        let ritz = tridiagonal_max_eigenvalue(&alphas, &betas);
        let beta = w.dot(&w).sqrt();
        // an invariant subspace makes the Ritz value exact
        if beta <= 1e-13 * scale || (previous - ritz).abs() <= RITZ_TOL * ritz.abs() {
            return Ok(ritz.max(LAMBDA_MAX_FLOOR));
        }
        previous = ritz;
        betas.push(beta);
        q = w / beta;
    }
    if basis.len() == n {
        return Ok(previous.max(LAMBDA_MAX_FLOOR));
    }
    log::warn!("lambda_max estimate did not converge in {LANCZOS_MAX_STEPS} steps; using {LAMBDA_MAX_FALLBACK}");
    Ok(LAMBDA_MAX_FALLBACK)
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off`, by Sturm-sequence bisection.
fn tridiagonal_max_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let k = diag.len();
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..k).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending and eigenvectors
/// as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Cyclic Jacobi eigendecomposition.
pub fn symmetric_eigendecomposition(m: &Array2<f64>) -> Result<SymmetricEigen> {
    check_symmetric(m)?;
    let n = m.nrows();
    let mut a = m.clone();
    // average the two triangles so rounding noise in the input stays symmetric
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = avg;
            a[[j, i]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_THRESHOLD * frob;

    let off_norm = |a: &Array2<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[[i, j]] * a[[i, j]];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
        converged = off_norm(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[[x, x]].total_cmp(&a[[y, y]]));
    let values: Array1<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    Ok(SymmetricEigen { values, vectors })
}

/// Applies `A ← JᵀAJ`, `V ← VJ` for the plane rotation in `(p, q)` that
/// zeroes `A[p, q]`.
fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    let app = a[[p, p]];
    let aqq = a[[q, q]];
    let apq = a[[p, q]];
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[[k, p]] = new_kp;
        a[[p, k]] = new_kp;
        a[[k, q]] = new_kq;
        a[[q, k]] = new_kq;
    }
    a[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    a[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}
