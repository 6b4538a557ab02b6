use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("degenerate field: {0}")]
    Degenerate(String),
    #[error("point outside kernel table extent: {0}")]
    Extent(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("range below grid resolution: {0}")]
    Resolution(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("support mismatch: {0}")]
    Support(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("validator failed ({name}): {detail}")]
    Validator { name: String, detail: String },
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
