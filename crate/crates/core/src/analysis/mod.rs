//! Expected counts, a linear cost model over [`ExecStats`], and comparisons.

mod cost;
mod counts;

use thiserror::Error;

pub use cost::{compare, cost, geomean, ClassRatio, ComparisonReport, CostWeights};
pub use counts::{expected_counts, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),
    #[error("weights line {line}: {msg}")]
    Weights { line: usize, msg: String },
}
