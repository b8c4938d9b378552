use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("non-finite data in {0}")]
    NotFinite(String),
    #[error("row {row} has unbounded variable {var}; supply an explicit big-M")]
    UnboundedBigM { row: String, var: usize },
    #[error("LP text parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
