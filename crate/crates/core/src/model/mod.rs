//! Graph neural reconstruction models.
//!
//! [`CascadeModel`] stacks cascade layers, each a sum over branches of
//! Chebyshev filters of increasing order mixed by learnable scalars. It maps
//! the temporal differences of the masked observations, `(J ∘ X) D_h`
//! (`N × (M−1)`), to a full `N × M` reconstruction. [`GcnModel`] is the
//! first-order GCN baseline with the same input, loss and trainer.

mod adam;
mod cascade;
mod checkpoint;
mod chebyshev;
mod gcn;
mod loss;
mod timegnn;
mod train;

pub use adam::AdamW;
pub use cascade::{cascade_forward, CascadeLayerParams};
pub use checkpoint::{GcnCheckpoint, TimeGnnCheckpoint};
pub use chebyshev::cheb_basis;
pub use gcn::{gcn_forward, GcnModel};
pub use loss::{loss, loss_gradient};
pub use timegnn::{model_forward, CascadeModel};
pub use train::{train_gcn, train_network, train_timegnn, LossTerms, Network, TrainConfig, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pointwise nonlinearity applied after every hidden layer; the output layer
/// is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    #[serde(alias = "identity")]
    Linear,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    pub(crate) fn apply(self, x: &mut ndarray::Array2<f64>) {
        if self == Activation::Relu {
            x.mapv_inplace(|v| v.max(0.0));
        }
    }

    /// Masks `upstream` by the derivative at pre-activation `pre`.
    pub(crate) fn backprop(self, pre: &ndarray::Array2<f64>, upstream: &mut ndarray::Array2<f64>) {
        if self == Activation::Relu {
            ndarray::Zip::from(upstream).and(pre).for_each(|g, &p| {
                if p <= 0.0 {
                    *g = 0.0;
                }
            });
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" | "identity" => Ok(Activation::Linear),
            other => Err(Error::config("activation", format!("unknown activation {other:?}"))),
        }
    }
}

/// Architecture hyperparameters shared by both networks (`alpha` is ignored
/// by the GCN).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub alpha: usize,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 8,
            alpha: 3,
            activation: Activation::Relu,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::config("layers", "must be at least 1"));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        if self.alpha == 0 {
            return Err(Error::config("alpha", "must be at least 1"));
        }
        Ok(())
    }

    /// Layer widths `M−1 → H → … → H → M`.
    pub fn dims(&self, n_times: usize) -> Vec<usize> {
        let mut dims = vec![n_times - 1];
        dims.extend(std::iter::repeat_n(self.hidden, self.layers - 1));
        dims.push(n_times);
        dims
    }
}
