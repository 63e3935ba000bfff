//! JSON checkpoints. Weight matrices are stored flattened in row-major order.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::cascade::CascadeLayerParams;
use super::gcn::GcnModel;
use super::timegnn::CascadeModel;
use super::Activation;
use crate::error::{Error, Result};

const TIMEGNN_FORMAT: &str = "tvgs-timegnn-v1";
const GCN_FORMAT: &str = "tvgs-gcn-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeLayerCheckpoint {
    pub mu: Vec<f64>,
    /// `weights[ρ−1][k−1]`, each `in_dim · out_dim` long.
    pub weights: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGnnCheckpoint {
    pub format: String,
    pub dims: Vec<usize>,
    pub alpha: usize,
    pub activation: Activation,
    pub seed: u64,
    pub layers: Vec<CascadeLayerCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnCheckpoint {
    pub format: String,
    pub dims: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub weights: Vec<Vec<f64>>,
}

fn flatten(w: &Array2<f64>) -> Vec<f64> {
    w.iter().copied().collect()
}

fn unflatten(data: &[f64], rows: usize, cols: usize, context: &'static str) -> Result<Array2<f64>> {
    Array2::from_shape_vec((rows, cols), data.to_vec()).map_err(|_| Error::shape(context, rows * cols, data.len()))
}

fn check_format(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::InvalidInput(format!("checkpoint format {found:?}, expected {expected:?}")));
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

impl TimeGnnCheckpoint {
    pub fn from_model(model: &CascadeModel) -> Self {
        Self {
            format: TIMEGNN_FORMAT.into(),
            dims: model.dims(),
            alpha: model.layers[0].alpha(),
            activation: model.activation,
            seed: model.seed,
            layers: model
                .layers
                .iter()
                .map(|l| CascadeLayerCheckpoint {
                    mu: l.branch_scalars.clone(),
                    weights: l.weights.iter().map(|b| b.iter().map(flatten).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<CascadeModel> {
        check_format(&self.format, TIMEGNN_FORMAT)?;
        if self.dims.len() != self.layers.len() + 1 {
            return Err(Error::shape("checkpoint dims", self.layers.len() + 1, self.dims.len()));
        }
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                if layer.weights.len() != self.alpha {
                    return Err(Error::shape("checkpoint layer branches", format!("{} in layer {}", self.alpha, l + 1), layer.weights.len()));
                }
                let (rows, cols) = (self.dims[l], self.dims[l + 1]);
                let weights = layer
                    .weights
                    .iter()
                    .map(|b| b.iter().map(|w| unflatten(w, rows, cols, "checkpoint weight")).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                CascadeLayerParams::new(weights, layer.mu.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        CascadeModel::new(layers, self.activation, self.seed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

impl GcnCheckpoint {
    pub fn from_model(model: &GcnModel) -> Self {
        Self {
            format: GCN_FORMAT.into(),
            dims: model.dims(),
            activation: model.activation,
            seed: model.seed,
            weights: model.weights.iter().map(flatten).collect(),
        }
    }

    pub fn to_model(&self) -> Result<GcnModel> {
        check_format(&self.format, GCN_FORMAT)?;
        if self.dims.len() != self.weights.len() + 1 {
            return Err(Error::shape("checkpoint dims", self.weights.len() + 1, self.dims.len()));
        }
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| unflatten(w, self.dims[l], self.dims[l + 1], "checkpoint weight"))
            .collect::<Result<Vec<_>>>()?;
        GcnModel::new(weights, self.activation, self.seed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}
