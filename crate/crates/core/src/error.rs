use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("expected a tensor of rank {expected}, got rank {got}")]
    Rank { expected: String, got: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("metric not symmetric: {0}")]
    AsymmetricMetric(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("scene: {0}")]
    Scene(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
