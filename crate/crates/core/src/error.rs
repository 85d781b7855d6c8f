use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alignment error: expected {expected} values, found {found}")]
    Alignment { expected: usize, found: usize },

    #[error("policy error: {0}")]
    Policy(String),

    #[error("infeasible k={k}: only {available} distinct rows available")]
    InfeasibleK { k: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("empty cluster: cannot compute a mode from no values")]
    EmptyCluster,

    #[error("descent violated in epoch {epoch} moving row {row}: cost {before} -> {after}")]
    DescentViolation {
        epoch: usize,
        row: usize,
        before: f64,
        after: f64,
    },

    #[error("invalid elbow curve: {0}")]
    InvalidCurve(String),

    #[error("schema error{}: {message}", item.as_ref().map(|i| format!(" (item `{i}`)")).unwrap_or_default())]
    Schema {
        item: Option<String>,
        message: String,
    },

    #[error("parse error at row {row}{}: {message}", column.as_ref().map(|c| format!(", column `{c}`")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<String>,
        message: String,
    },

    #[error("degenerate profile: raw scores must be non-negative and not all zero")]
    DegenerateProfile,

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn policy(msg: impl Into<String>) -> Self {
        Error::Policy(msg.into())
    }

    pub(crate) fn schema(item: Option<&str>, msg: impl Into<String>) -> Self {
        Error::Schema {
            item: item.map(str::to_owned),
            message: msg.into(),
        }
    }

    /// Process exit status for this error: 2 for an infeasible cluster
    /// configuration, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InfeasibleK { .. } => 2,
            _ => 1,
        }
    }
}
