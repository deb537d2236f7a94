use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario document could not be read.
    #[error("parse error{}{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        key: Option<String>,
        msg: String,
    },

    /// A configuration violates one of its invariants.
    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("sequence length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Every start of a best-response search ended outside the feasible set.
    #[error("no feasible heading sequence (smallest violation {violation:.3e})")]
    NoFeasibleSequence { violation: f64 },

    #[error("pursuer model and evader positions coincide")]
    CoincidentPositions,

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
