use thiserror::Error;

use crate::params::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {}", format_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix dimension 2^{n} exceeds the configured cap 2^{cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("near-singular denominator in {context}: |{value:.3e}| below tolerance {tol:.1e}")]
    Degenerate { context: String, value: f64, tol: f64 },

    #[error("parameter regime not supported: {0}")]
    Regime(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
