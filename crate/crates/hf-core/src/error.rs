use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum HfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frame solve residual {residual:.3e} exceeds 1e-9: parametrization inconsistency")]
    FrameSolve { residual: f64 },

    #[error("numerically singular matrix field at node {node} (condition estimate {cond:.3e})")]
    SingularField { node: usize, cond: f64 },

    #[error("degree calibration unstable: raw {raw:.6} is not within 0.25 of an integer")]
    CalibrationUnstable { raw: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HfError>;
