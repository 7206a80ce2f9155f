use thiserror::Error;

use crate::model::ValidationIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("value must be finite, got {0}")]
    NonFinite(f64),
    #[error("rate must be > 0 and finite, got {0}")]
    InvalidRate(f64),
    #[error("uniform variate must lie in (0, 1], got {0}")]
    InvalidUniform(f64),
    #[error("reliability must lie in [0, 1], got {0}")]
    InvalidReliability(f64),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("{0}")]
    Usage(String),
    #[error("invalid model: {}", join_issues(.0))]
    InvalidModel(Vec<ValidationIssue>),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
