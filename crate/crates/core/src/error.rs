use thiserror::Error;

/// Errors produced by the DSRR library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument or configuration value is out of its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Input data violates a precondition (non-finite values, length mismatch).
    #[error("invalid input: {0}")]
    Input(String),
    /// A statistical estimate could not be produced.
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Input(format!(
            "{what} contains a non-finite value at index {i}"
        ))),
        None => Ok(()),
    }
}
