use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::MatOp;
use crate::temporal::{sobolev_gradient, sobolev_smoothness};

fn check(x_bar: &Array2<f64>, x_true: &Array2<f64>, s: &[(usize, usize)]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySet("training index set"));
    }
    if x_bar.dim() != x_true.dim() {
        return Err(Error::shape("loss", format!("{:?}", x_true.dim()), format!("{:?}", x_bar.dim())));
    }
    let (n, m) = x_bar.dim();
    if let Some(&(i, j)) = s.iter().find(|&&(i, j)| i >= n || j >= m) {
        return Err(Error::InvalidInput(format!("training index ({i}, {j}) outside {n}x{m}")));
    }
    Ok(())
}

/// Masked MSE over `s` plus `λ · tr((X̄D_h)ᵀ(L + εI)X̄D_h)`.
pub fn loss<Op: MatOp + ?Sized>(
    x_bar: &Array2<f64>,
    x_true: &Array2<f64>,
    s: &[(usize, usize)],
    l: &Op,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    check(x_bar, x_true, s)?;
    let mse = s.iter().map(|&(i, j)| (x_true[[i, j]] - x_bar[[i, j]]).powi(2)).sum::<f64>() / s.len() as f64;
    if lambda == 0.0 {
        return Ok(mse);
    }
    Ok(mse + lambda * sobolev_smoothness(x_bar.view(), l, epsilon)?)
}

/// [`loss`] together with its gradient with respect to `x_bar`.
pub fn loss_gradient<Op: MatOp + ?Sized>(
    x_bar: &Array2<f64>,
    x_true: &Array2<f64>,
    s: &[(usize, usize)],
    l: &Op,
    lambda: f64,
    epsilon: f64,
) -> Result<(f64, Array2<f64>)> {
    let value = loss(x_bar, x_true, s, l, lambda, epsilon)?;
    let mut grad = if lambda == 0.0 {
        Array2::zeros(x_bar.raw_dim())
    } else {
        sobolev_gradient(x_bar.view(), l, epsilon)? * lambda
    };
    let scale = 2.0 / s.len() as f64;
    for &(i, j) in s {
        grad[[i, j]] += scale * (x_bar[[i, j]] - x_true[[i, j]]);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{random, random_scaled_laplacian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_fit_constant_in_time_is_zero() {
        let b = random_scaled_laplacian(4, 1);
        let x = Array2::from_shape_fn((4, 3), |(i, _)| i as f64 - 1.0);
        let s = vec![(0, 0), (1, 2), (3, 1)];
        assert_eq!(loss(&x, &x, &s, &b.laplacian, 0.5, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn lambda_zero_is_masked_mse_and_ignores_other_entries() {
        let b = random_scaled_laplacian(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(4, 3, &mut rng);
        let mut xb = random(4, 3, &mut rng);
        let s = vec![(0, 1), (2, 2)];
        let mse = ((x[[0, 1]] - xb[[0, 1]]).powi(2) + (x[[2, 2]] - xb[[2, 2]]).powi(2)) / 2.0;
        assert_eq!(loss(&xb, &x, &s, &b.laplacian, 0.0, 0.05).unwrap(), mse);
        xb[[3, 0]] += 100.0;
        assert_eq!(loss(&xb, &x, &s, &b.laplacian, 0.0, 0.05).unwrap(), mse);
    }

    #[test]
    fn composes_mse_and_sobolev() {
        let b = random_scaled_laplacian(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(4, 3, &mut rng);
        let xb = random(4, 3, &mut rng);
        let s: Vec<(usize, usize)> = vec![(0, 0), (1, 1), (2, 2), (3, 0), (3, 2)];
        let mse: f64 = s.iter().map(|&(i, j)| (x[[i, j]] - xb[[i, j]]).powi(2)).sum::<f64>() / 5.0;
        let expected = mse + 1e-4 * sobolev_smoothness(xb.view(), &b.laplacian, 0.05).unwrap();
        let got = loss(&xb, &x, &s, &b.laplacian, 1e-4, 0.05).unwrap();
        assert!((got - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = random_scaled_laplacian(4, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(4, 5, &mut rng);
        let xb = random(4, 5, &mut rng);
        let s = vec![(0, 0), (1, 3), (2, 4), (3, 1)];
        let (_, g) = loss_gradient(&xb, &x, &s, &b.laplacian, 0.3, 0.05).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            for j in 0..5 {
                let mut p = xb.clone();
                p[[i, j]] += h;
                let mut m = xb.clone();
                m[[i, j]] -= h;
                let fd = (loss(&p, &x, &s, &b.laplacian, 0.3, 0.05).unwrap() - loss(&m, &x, &s, &b.laplacian, 0.3, 0.05).unwrap()) / (2.0 * h);
                assert!((fd - g[[i, j]]).abs() < 1e-7 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn empty_set_is_error() {
        let b = random_scaled_laplacian(3, 8);
        let x = Array2::zeros((3, 2));
        assert!(matches!(loss(&x, &x, &[], &b.laplacian, 0.0, 0.0), Err(Error::EmptySet(_))));
        assert!(loss(&x, &x, &[(5, 0)], &b.laplacian, 0.0, 0.0).is_err());
    }
}
