use std::path::Path;

use super::records::ResultRecord;
use super::Method;
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: [&str; 10] = [
    "method",
    "dataset",
    "mean_rmse",
    "mean_mae",
    "mean_mape",
    "pooled_rmse",
    "pooled_mae",
    "pooled_mape",
    "records",
    "failed",
];

pub const CURVE_HEADER: [&str; 6] = ["method", "dataset", "density", "mean_rmse", "mean_mae", "mean_mape"];

/// Per (method, dataset). `mean_*` weight every density equally; `pooled_*`
/// average all successful records.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub dataset: String,
    pub mean_rmse: Option<f64>,
    pub mean_mae: Option<f64>,
    pub mean_mape: Option<f64>,
    pub pooled_rmse: Option<f64>,
    pub pooled_mae: Option<f64>,
    pub pooled_mape: Option<f64>,
    pub records: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub method: Method,
    pub dataset: String,
    pub density: f64,
    pub mean_rmse: Option<f64>,
    pub mean_mae: Option<f64>,
    pub mean_mape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub curve: Vec<CurveRow>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(records: &[ResultRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::EmptySet("records"));
    }
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.method.name(), &a.dataset)
            .cmp(&(b.method.name(), &b.dataset))
            .then(a.density.total_cmp(&b.density))
            .then(a.repetition.cmp(&b.repetition))
    });
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for group in sorted.chunk_by(|a, b| a.method == b.method && a.dataset == b.dataset) {
        let first = group[0];
        let start = curve.len();
        for cell in group.chunk_by(|a, b| a.density == b.density) {
            curve.push(CurveRow {
                method: first.method,
                dataset: first.dataset.clone(),
                density: cell[0].density,
                mean_rmse: mean(cell.iter().map(|r| r.rmse)),
                mean_mae: mean(cell.iter().map(|r| r.mae)),
                mean_mape: mean(cell.iter().map(|r| r.mape)),
            });
        }
        let dens = &curve[start..];
        rows.push(SummaryRow {
            method: first.method,
            dataset: first.dataset.clone(),
            mean_rmse: mean(dens.iter().map(|c| c.mean_rmse)),
            mean_mae: mean(dens.iter().map(|c| c.mean_mae)),
            mean_mape: mean(dens.iter().map(|c| c.mean_mape)),
            pooled_rmse: mean(group.iter().map(|r| r.rmse)),
            pooled_mae: mean(group.iter().map(|r| r.mae)),
            pooled_mape: mean(group.iter().map(|r| r.mape)),
            records: group.len(),
            failed: group.iter().filter(|r| r.failed()).count(),
        });
    }
    Ok(Summary { rows, curve })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Summary {
    pub fn row(&self, method: Method) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn curve_for(&self, method: Method) -> Vec<&CurveRow> {
        self.curve.iter().filter(|c| c.method == method).collect()
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SUMMARY_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                r.dataset.clone(),
                opt(r.mean_rmse),
                opt(r.mean_mae),
                opt(r.mean_mape),
                opt(r.pooled_rmse),
                opt(r.pooled_mae),
                opt(r.pooled_mape),
                r.records.to_string(),
                r.failed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CURVE_HEADER)?;
        for c in &self.curve {
            w.write_record([
                c.method.name().to_string(),
                c.dataset.clone(),
                c.density.to_string(),
                opt(c.mean_rmse),
                opt(c.mean_mae),
                opt(c.mean_mape),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
