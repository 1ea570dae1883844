use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("singular metric at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("metric at {point:?} has {found} negative directions, declared {expected}")]
    Signature {
        point: Vec<f64>,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("immersion Jacobian is rank deficient at u = {node:?} (smallest singular value {sigma:e})")]
    RankDeficient { node: Vec<f64>, sigma: f64 },
    #[error("induced metric is not positive definite at u = {node:?}")]
    NotSpacelike { node: Vec<f64> },
    #[error("immersion is not Legendrian (defect {defect:e} > {tolerance:e})")]
    NotLegendrian { defect: f64, tolerance: f64 },
    #[error("immersion is not minimal (|H| = {mean_curvature:e} > {tolerance:e})")]
    NotMinimal { mean_curvature: f64, tolerance: f64 },
    #[error("immersion is not L-minimal (defect {defect:e} > {tolerance:e})")]
    NotLMinimal { defect: f64, tolerance: f64 },
    #[error("parameter domain is not closed (axis {axis} is not periodic)")]
    NotClosed { axis: usize },
    #[error("flow failed at t = {t}: {reason}")]
    Flow { t: f64, reason: String },
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("structure rejected: {0}")]
    Structure(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
