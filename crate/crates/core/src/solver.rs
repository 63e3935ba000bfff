//! Optimization baselines TGSR and GraphTRSS.
//!
//! Both minimize
//!
//! ```text
//! ½‖J ∘ X − Y‖²_F + (υ/2)·tr((X D_h)ᵀ (L + εI) X D_h)
//! ```
//!
//! with `ε = 0` for TGSR and `ε > 0` for the Sobolev variant GraphTRSS. The
//! minimizer solves the linear system `A(X) = Y` with
//! `A(X) = J ∘ X + υ (L + εI) X D_h D_hᵀ`, a symmetric PSD operator applied
//! matrix-free and inverted by a conjugate-gradient (conjugate residual)
//! iteration.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::SamplingMask;
use crate::sparse::MatOp;
use crate::temporal::{difference_gram, sobolev_smoothness};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub upsilon: f64,
    pub epsilon: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            upsilon: 0.5,
            epsilon: 0.05,
            cg_tol: 1e-8,
            cg_max_iter: 2000,
        }
    }
}

impl SolverConfig {
    /// Plain TGSR (no Sobolev shift) with the given regularization weight.
    pub fn tgsr(upsilon: f64) -> Self {
        Self {
            upsilon,
            epsilon: 0.0,
            ..Self::default()
        }
    }

    /// GraphTRSS with the given weight and shift.
    pub fn graphtrss(upsilon: f64, epsilon: f64) -> Self {
        Self {
            upsilon,
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.upsilon.is_finite() && self.upsilon > 0.0) {
            return Err(Error::config("upsilon", format!("must be positive, got {}", self.upsilon)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config("epsilon", format!("must be nonnegative, got {}", self.epsilon)));
        }
        if !(self.cg_tol.is_finite() && self.cg_tol > 0.0) {
            return Err(Error::config("cg_tol", format!("must be positive, got {}", self.cg_tol)));
        }
        if self.cg_max_iter == 0 {
            return Err(Error::config("cg_max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Array2<f64>,
    pub iterations: usize,
    /// `‖A(X) − Y‖_F / ‖Y‖_F` at the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration, starting with the initial one.
    pub residual_history: Vec<f64>,
}

fn check_shapes<Op: MatOp + ?Sized>(x: &Array2<f64>, mask: &SamplingMask, l: &Op, context: &'static str) -> Result<()> {
    if x.dim() != mask.dim() {
        return Err(Error::shape(context, format!("{:?} (mask)", mask.dim()), format!("{:?}", x.dim())));
    }
    if l.dim() != x.nrows() {
        return Err(Error::shape(context, format!("{0}x{0} laplacian", x.nrows()), l.dim()));
    }
    if x.ncols() < 2 {
        return Err(Error::shape(context, "at least 2 time steps", x.ncols()));
    }
    Ok(())
}

/// `A(X) = J ∘ X + υ (L + εI) X D_h D_hᵀ`.
pub fn recon_operator<Op: MatOp + ?Sized>(x: &Array2<f64>, mask: &SamplingMask, l: &Op, cfg: &SolverConfig) -> Result<Array2<f64>> {
    check_shapes(x, mask, l, "recon_operator")?;
    Ok(apply_operator(x, mask, l, cfg))
}

fn apply_operator<Op: MatOp + ?Sized>(x: &Array2<f64>, mask: &SamplingMask, l: &Op, cfg: &SolverConfig) -> Array2<f64> {
    let gram = difference_gram(x.view()).expect("shape checked by caller");
    let mut out = l.apply(gram.view());
    out.scaled_add(cfg.epsilon, &gram);
    out *= cfg.upsilon;
    Zip::from(&mut out).and(x).and(mask.mask()).for_each(|o, &xv, &on| {
        if on {
            *o += xv;
        }
    });
    out
}

fn inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

/// Reconstruction objective at `x_tilde`.
pub fn objective_value<Op: MatOp + ?Sized>(
    x_tilde: &Array2<f64>,
    observed: &Array2<f64>,
    mask: &SamplingMask,
    l: &Op,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_shapes(x_tilde, mask, l, "objective_value")?;
    if observed.dim() != x_tilde.dim() {
        return Err(Error::shape("objective_value observed", format!("{:?}", x_tilde.dim()), format!("{:?}", observed.dim())));
    }
    let fit = mask.apply(x_tilde)? - observed;
    let fit = 0.5 * inner(&fit, &fit);
    Ok(fit + 0.5 * cfg.upsilon * sobolev_smoothness(x_tilde.view(), l, cfg.epsilon)?)
}

/// Solves `A(X) = Y` by the conjugate residual variant of conjugate
/// gradient, starting from `X₀ = Y`.
///
/// Stops when `‖A(X) − Y‖_F / ‖Y‖_F < cg_tol`. Hitting `cg_max_iter` first
/// returns the last iterate with `converged = false`.
pub fn solve<Op: MatOp + ?Sized>(observed: &Array2<f64>, mask: &SamplingMask, l: &Op, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    check_shapes(observed, mask, l, "solve")?;
    if let Some(((i, j), v)) = observed
        .indexed_iter()
        .find(|&((i, j), v)| !mask.is_sampled(i, j) && *v != 0.0)
    {
        return Err(Error::InvalidInput(format!("observed value {v} at unsampled entry ({i}, {j}); expected Y = J ∘ Y")));
    }
    if observed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observed signal".into()));
    }

    let y_norm = inner(observed, observed).sqrt();
    if y_norm == 0.0 {
        return Ok(SolveOutcome {
            x: observed.clone(),
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
            residual_history: vec![0.0],
        });
    }

    // Conjugate residual: the CG recurrence in the A-inner product, which
    // minimizes ‖r‖ over the Krylov space so the residual never grows.
    let mut x = observed.clone();
    let mut r = observed - &apply_operator(&x, mask, l, cfg);
    let mut ar = apply_operator(&r, mask, l, cfg);
    let mut p = r.clone();
    let mut ap = ar.clone();
    let mut r_ar = inner(&r, &ar);
    let mut history = vec![inner(&r, &r).sqrt() / y_norm];
    let mut iterations = 0;

    while history[iterations] >= cfg.cg_tol && iterations < cfg.cg_max_iter {
        let ap_norm2 = inner(&ap, &ap);
        if r_ar <= 0.0 || ap_norm2 <= 0.0 {
            // residual in the operator null space; the Krylov space is exhausted
            break;
        }
        let step = r_ar / ap_norm2;
        x.scaled_add(step, &p);
        r.scaled_add(-step, &ap);
        ar = apply_operator(&r, mask, l, cfg);
        let r_ar_next = inner(&r, &ar);
        let beta = r_ar_next / r_ar;
        p *= beta;
        p += &r;
        ap *= beta;
        ap += &ar;
        r_ar = r_ar_next;
        iterations += 1;
        history.push(inner(&r, &r).sqrt() / y_norm);
    }

    let relative_residual = history[iterations];
    let converged = relative_residual < cfg.cg_tol;
    if !converged {
        log::warn!("conjugate gradient stopped after {iterations} iterations at relative residual {relative_residual:e}");
    }
    Ok(SolveOutcome {
        x,
        iterations,
        relative_residual,
        converged,
        residual_history: history,
    })
}

#[cfg(test)]
pub(crate) mod oracle {
    use ndarray::{Array1, Array2};

    /// Gaussian elimination with partial pivoting.
    pub fn dense_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
        let n = b.len();
        let mut m = a.clone();
        let mut rhs = b.clone();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs())).unwrap();
            if pivot != col {
                for k in 0..n {
                    m.swap([col, k], [pivot, k]);
                }
                rhs.swap(col, pivot);
            }
            for row in (col + 1)..n {
                let f = m[[row, col]] / m[[col, col]];
                if f != 0.0 {
                    for k in col..n {
                        m[[row, k]] -= f * m[[col, k]];
                    }
                    rhs[row] -= f * rhs[col];
                }
            }
        }
        let mut x = Array1::zeros(n);
        for row in (0..n).rev() {
            let s: f64 = ((row + 1)..n).map(|k| m[[row, k]] * x[k]).sum();
            x[row] = (rhs[row] - s) / m[[row, row]];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::dense_solve;
    use super::*;
    use crate::temporal::oracle::difference_matrix;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(n: usize, m: usize, p: f64, rng: &mut ChaCha8Rng) -> SamplingMask {
        loop {
            let bits = Array2::from_shape_fn((n, m), |_| rng.random::<f64>() < p);
            if let Ok(mask) = SamplingMask::from_bool(bits) {
                return mask;
            }
        }
    }

    fn random_laplacian(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let w = rng.random::<f64>();
                a[[i, j]] = w;
                a[[j, i]] = w;
            }
        }
        let g = crate::graph::Graph::from_adjacency(a, None).unwrap();
        crate::spectral::normalized_laplacian(&g).unwrap().laplacian
    }

    fn random(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((n, m), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn frob(a: &Array2<f64>) -> f64 {
        inner(a, a).sqrt()
    }

    /// Columns are `A(E_ij)` for row-major basis matrices `E_ij`.
    fn operator_matrix(mask: &SamplingMask, l: &Array2<f64>, cfg: &SolverConfig) -> Array2<f64> {
        let (n, m) = mask.dim();
        let mut full = Array2::zeros((n * m, n * m));
        for idx in 0..n * m {
            let mut e = Array2::zeros((n, m));
            e[[idx / m, idx % m]] = 1.0;
            let col = recon_operator(&e, mask, l, cfg).unwrap();
            for (r, v) in col.iter().enumerate() {
                full[[r, idx]] = *v;
            }
        }
        full
    }

    #[test]
    fn operator_matches_materialized_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let l = random_laplacian(4, &mut rng);
        let mask = random_mask(4, 3, 0.5, &mut rng);
        let x = random(4, 3, &mut rng);
        let cfg = SolverConfig::graphtrss(0.7, 0.05);
        let d = difference_matrix(3);
        let shifted = &l + &(Array2::<f64>::eye(4) * 0.05);
        let dense = mask.apply(&x).unwrap() + shifted.dot(&x).dot(&d).dot(&d.t()) * 0.7;
        let fast = recon_operator(&x, &mask, &l, &cfg).unwrap();
        assert!(frob(&(&dense - &fast)) <= 1e-13 * frob(&dense));
    }

    #[test]
    fn operator_on_constant_in_time_is_masking() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let l = random_laplacian(5, &mut rng);
        let mask = random_mask(5, 4, 0.5, &mut rng);
        let x = Array2::from_shape_fn((5, 4), |(i, _)| i as f64 + 0.5);
        let out = recon_operator(&x, &mask, &l, &SolverConfig::graphtrss(3.0, 0.05)).unwrap();
        assert_eq!(out, mask.apply(&x).unwrap());
    }

    #[test]
    fn operator_is_near_identity_when_fully_sampled_and_tiny_upsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let l = random_laplacian(4, &mut rng);
        let mask = SamplingMask::full(4, 5).unwrap();
        let x = random(4, 5, &mut rng);
        let out = recon_operator(&x, &mask, &l, &SolverConfig::tgsr(1e-12)).unwrap();
        assert!(frob(&(&out - &x)) <= 1e-10 * frob(&x));
    }

    #[test]
    fn operator_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let n = rng.random_range(2..6);
            let m = rng.random_range(2..6);
            let l = random_laplacian(n, &mut rng);
            let mask = random_mask(n, m, 0.4, &mut rng);
            let cfg = SolverConfig::graphtrss(rng.random::<f64>() * 2.0 + 0.01, rng.random::<f64>() * 0.1);
            let x = random(n, m, &mut rng);
            let z = random(n, m, &mut rng);
            let ax = recon_operator(&x, &mask, &l, &cfg).unwrap();
            let az = recon_operator(&z, &mask, &l, &cfg).unwrap();
            let lhs = inner(&ax, &z);
            let rhs = inner(&x, &az);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
            assert!(inner(&ax, &x) >= -1e-10);
        }
    }

    #[test]
    fn full_sampling_tiny_upsilon_recovers_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let l = random_laplacian(6, &mut rng);
        let mask = SamplingMask::full(6, 7).unwrap();
        let y = random(6, 7, &mut rng);
        let out = solve(&y, &mask, &l, &SolverConfig::tgsr(1e-12)).unwrap();
        assert!(out.converged);
        assert!(frob(&(&out.x - &y)) <= 1e-6 * frob(&y));
    }

    #[test]
    fn matches_dense_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let l = random_laplacian(4, &mut rng);
        let mask = random_mask(4, 3, 0.5, &mut rng);
        let y = mask.apply(&random(4, 3, &mut rng)).unwrap();
        let cfg = SolverConfig {
            cg_tol: 1e-12,
            ..SolverConfig::graphtrss(0.5, 0.05)
        };
        let out = solve(&y, &mask, &l, &cfg).unwrap();
        let a = operator_matrix(&mask, &l, &cfg);
        let b: Array1<f64> = y.iter().copied().collect();
        let direct = Array2::from_shape_vec((4, 3), dense_solve(&a, &b).to_vec()).unwrap();
        assert!(frob(&(&out.x - &direct)) <= 1e-8 * frob(&direct));
    }

    #[test]
    fn constant_truth_sampled_at_first_step_stays_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let (n, m) = (5, 6);
        let l = random_laplacian(n, &mut rng);
        let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
        let truth = Array2::from_shape_fn((n, m), |(i, _)| values[i]);
        let mask = SamplingMask::from_bool(Array2::from_shape_fn((n, m), |(_, t)| t == 0)).unwrap();
        let y = mask.apply(&truth).unwrap();
        let cfg = SolverConfig {
            cg_tol: 1e-12,
            ..SolverConfig::graphtrss(1.0, 0.05)
        };
        let out = solve(&y, &mask, &l, &cfg).unwrap();
        let a = operator_matrix(&mask, &l, &cfg);
        let b: Array1<f64> = y.iter().copied().collect();
        let direct = Array2::from_shape_vec((n, m), dense_solve(&a, &b).to_vec()).unwrap();
        for i in 0..n {
            for t in 0..m {
                assert!((out.x[[i, t]] - values[i]).abs() < 1e-4);
                assert!((direct[[i, t]] - values[i]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn residual_history_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for _ in 0..20 {
            let l = random_laplacian(8, &mut rng);
            let mask = random_mask(8, 10, 0.4, &mut rng);
            let y = mask.apply(&random(8, 10, &mut rng)).unwrap();
            let out = solve(&y, &mask, &l, &SolverConfig::graphtrss(1.0, 0.05)).unwrap();
            for w in out.residual_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "residual increased: {:?}", w);
            }
        }
    }

    #[test]
    fn solution_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let l = random_laplacian(6, &mut rng);
        let mask = random_mask(6, 8, 0.5, &mut rng);
        let y = mask.apply(&random(6, 8, &mut rng)).unwrap();
        let cfg = SolverConfig::graphtrss(0.5, 0.05);
        let out = solve(&y, &mask, &l, &cfg).unwrap();
        let best = objective_value(&out.x, &y, &mask, &l, &cfg).unwrap();
        assert!(best <= objective_value(&y, &y, &mask, &l, &cfg).unwrap());
        for _ in 0..20 {
            let perturbed = &out.x + &(random(6, 8, &mut rng) * 1e-3);
            assert!(best <= objective_value(&perturbed, &y, &mask, &l, &cfg).unwrap());
        }
    }

    #[test]
    fn solve_is_linear_in_observations() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let l = random_laplacian(6, &mut rng);
        let mask = random_mask(6, 8, 0.5, &mut rng);
        let y = mask.apply(&random(6, 8, &mut rng)).unwrap();
        let cfg = SolverConfig {
            cg_tol: 1e-12,
            ..SolverConfig::graphtrss(0.5, 0.05)
        };
        let base = solve(&y, &mask, &l, &cfg).unwrap().x;
        let scaled = solve(&(&y * -3.5), &mask, &l, &cfg).unwrap().x;
        assert!(frob(&(&scaled - &(&base * -3.5))) <= 1e-8 * frob(&scaled));
    }

    #[test]
    fn objective_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let l = random_laplacian(3, &mut rng);
        let full = SamplingMask::full(3, 3).unwrap();
        let constant = Array2::from_shape_fn((3, 3), |(i, _)| i as f64);
        assert_eq!(objective_value(&constant, &constant, &full, &l, &SolverConfig::default()).unwrap(), 0.0);

        let mask = random_mask(3, 3, 0.6, &mut rng);
        let x = random(3, 3, &mut rng);
        let y = mask.apply(&random(3, 3, &mut rng)).unwrap();
        let fit = mask.apply(&x).unwrap() - &y;
        let half_fit = 0.5 * fit.iter().map(|v| v * v).sum::<f64>();
        let tiny = SolverConfig::tgsr(1e-15);
        assert!((objective_value(&x, &y, &mask, &l, &tiny).unwrap() - half_fit).abs() <= 1e-12 * half_fit.max(1.0));

        let cfg = SolverConfig::graphtrss(0.8, 0.05);
        let composed = half_fit + 0.4 * sobolev_smoothness(x.view(), &l, 0.05).unwrap();
        assert!((objective_value(&x, &y, &mask, &l, &cfg).unwrap() - composed).abs() <= 1e-12 * composed);
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = Array2::<f64>::eye(2);
        let mask = SamplingMask::from_bool(ndarray::array![[true, false], [true, true]]).unwrap();
        let y = ndarray::array![[1.0, 2.0], [1.0, 1.0]];
        assert!(matches!(solve(&y, &mask, &l, &SolverConfig::default()), Err(Error::InvalidInput(_))));
        let ok = mask.apply(&y).unwrap();
        assert!(solve(&ok, &mask, &l, &SolverConfig::tgsr(0.0)).is_err());
        assert!(recon_operator(&Array2::zeros((3, 2)), &mask, &l, &SolverConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let l = random_laplacian(10, &mut rng);
        let mask = random_mask(10, 20, 0.3, &mut rng);
        let y = mask.apply(&random(10, 20, &mut rng)).unwrap();
        let cfg = SolverConfig {
            cg_max_iter: 2,
            ..SolverConfig::default()
        };
        let out = solve(&y, &mask, &l, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }
}
