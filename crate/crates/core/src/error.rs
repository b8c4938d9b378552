use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid system data: {0}")]
    InvalidSystem(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not enough samples: {0}")]
    NotEnoughData(String),
    #[error("{context}: solver returned {status}")]
    Solver { context: String, status: String },
    #[error("big-M interval for {what} reached {value:.3e}; tighten the input bounds")]
    BigMBlowUp { what: String, value: f64 },
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("{path}: line {line}: {msg}")]
    Csv { path: String, line: usize, msg: String },
    #[error(transparent)]
    Milp(#[from] ruc_milp::MilpError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

pub(crate) fn solver_error(context: impl Into<String>, status: ruc_milp::Status) -> CoreError {
    CoreError::Solver {
        context: context.into(),
        status: format!("{status:?}"),
    }
}
