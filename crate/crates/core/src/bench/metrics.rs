use ndarray::Array2;

use crate::error::{Error, Result};

/// Entries with `|truth|` below this are left out of MAPE.
pub const MAPE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when every entry was skipped by the zero guard.
    pub mape: Option<f64>,
    pub mape_skipped: usize,
}

/// RMSE, MAE and MAPE of `x_hat` against `x_true` over `eval_indices`.
pub fn compute_metrics(x_hat: &Array2<f64>, x_true: &Array2<f64>, eval_indices: &[(usize, usize)]) -> Result<Metrics> {
    if x_hat.dim() != x_true.dim() {
        return Err(Error::shape("compute_metrics estimate", format!("{:?}", x_true.dim()), format!("{:?}", x_hat.dim())));
    }
    if eval_indices.is_empty() {
        return Err(Error::EmptySet("evaluation set"));
    }
    let (n, m) = x_true.dim();
    let (mut sq, mut abs, mut pct, mut counted) = (0.0, 0.0, 0.0, 0usize);
    for &(i, j) in eval_indices {
        if i >= n || j >= m {
            return Err(Error::InvalidInput(format!("evaluation index ({i}, {j}) outside {n}x{m}")));
        }
        let truth = x_true[[i, j]];
        let err = (x_hat[[i, j]] - truth).abs();
        sq += err * err;
        abs += err;
        if truth.abs() >= MAPE_GUARD {
            pct += err / truth.abs();
            counted += 1;
        }
    }
    let k = eval_indices.len() as f64;
    let metrics = Metrics {
        rmse: (sq / k).sqrt(),
        mae: abs / k,
        mape: (counted > 0).then(|| pct / counted as f64),
        mape_skipped: eval_indices.len() - counted,
    };
    if !(metrics.rmse.is_finite() && metrics.mae.is_finite()) {
        return Err(Error::NonFinite("reconstruction error".into()));
    }
    Ok(metrics)
}
