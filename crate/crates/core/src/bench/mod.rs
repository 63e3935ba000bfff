//! Monte Carlo benchmark harness: repeated random masks per density, every
//! method on identical masks, metrics on the unsampled entries.

mod config;
mod metrics;
mod records;
mod runner;
mod stats;
mod summary;

pub use config::{ExperimentConfig, NeuralParams, NeuralSearch, SolverGrid};
pub use metrics::{compute_metrics, Metrics, MAPE_GUARD};
pub use records::{read_records, write_records, RecordWriter, ResultRecord, RECORDS_HEADER};
pub use runner::{
    cell_seed, load_experiment_dataset, mean_imputation, run_experiment, run_method, run_monte_carlo, run_monte_carlo_with,
    ExperimentOutcome, MethodParams, MonteCarloOutcome, NeuralRun, Prepared,
};
pub use stats::spearman;
pub use summary::{summarize, CurveRow, Summary, SummaryRow, CURVE_HEADER, SUMMARY_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gcn,
    Graphtrss,
    /// Per-time-step mean of the observed entries.
    Mean,
    Tgsr,
    Timegnn,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gcn, Method::Graphtrss, Method::Mean, Method::Tgsr, Method::Timegnn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gcn => "gcn",
            Method::Graphtrss => "graphtrss",
            Method::Mean => "mean",
            Method::Tgsr => "tgsr",
            Method::Timegnn => "timegnn",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method {s:?}; expected one of gcn, graphtrss, mean, tgsr, timegnn")))
    }
}
