//! Recovery of time-varying graph signals from partial samples.
//!
//! A time-varying graph signal is an `N × M` matrix whose column `s` is the
//! signal on the `N` graph vertices at time `s`. Given a binary sampling mask
//! and the observed entries, this crate reconstructs the full matrix with:
//!
//! - [`solver`]: TGSR and its Sobolev-shifted variant GraphTRSS, solved by
//!   matrix-free conjugate gradient on the stationarity system.
//! - [`model`]: a cascade-of-Chebyshev-filters graph network (TimeGNN) with a
//!   masked MSE + Sobolev smoothness loss, hand-written reverse-mode
//!   gradients and an AdamW trainer, plus a plain GCN baseline.
//!
//! Supporting modules build k-NN graphs and Laplacians ([`graph`],
//! [`spectral`]), temporal operators ([`temporal`]), datasets and sampling
//! masks ([`data`], [`mask`]), and a Monte Carlo benchmark harness ([`bench`]).

pub mod bench;
pub mod data;
pub mod error;
pub mod graph;
pub mod mask;
pub mod model;
pub mod solver;
pub mod sparse;
pub mod spectral;
pub mod temporal;

pub use error::{Error, Result};
pub use graph::{build_knn_graph, Graph};
pub use mask::SamplingMask;
pub use spectral::{normalized_laplacian, LaplacianBundle};
pub use temporal::TimeSignal;
