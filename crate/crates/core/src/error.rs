use thiserror::Error;

/// Errors raised anywhere in the audit pipeline.
#[derive(Debug, Error)]
pub enum AuditError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("invariant violated at record {row}: {reason}")]
    Invariant { row: usize, reason: String },

    #[error("no pre-availability record with y=1 ({context}); P(Y=1,D=0) would be zero")]
    EmptyStratum { context: String },

    #[error("group {0} is not present in the frame")]
    GroupNotFound(u32),

    #[error("stratum {stratum} has {have} records but {need} folds were requested")]
    TooFewRecords {
        stratum: &'static str,
        have: usize,
        need: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no post-availability unit with y0=1")]
    NoNeedyUnits,

    #[error("population oracle requires a discrete covariate source")]
    UnsupportedSource,

    #[error("penalized normal equations are numerically singular")]
    DegenerateDesign,

    #[error("fold {fold}: training complement has no {stratum} rows")]
    EmptyTrainingStratum { fold: usize, stratum: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pair ({0}, {1}) is not present in the report")]
    PairNotFound(u32, u32),

    #[error("covariate {index} is not binary in the post-availability rows")]
    NonBinaryCovariate { index: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl AuditError {
    /// True for errors caused by the input data rather than by numerics or I/O.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            AuditError::Schema(_)
                | AuditError::Invariant { .. }
                | AuditError::EmptyStratum { .. }
                | AuditError::GroupNotFound(_)
                | AuditError::TooFewRecords { .. }
                | AuditError::EmptyTrainingStratum { .. }
                | AuditError::NonBinaryCovariate { .. }
                | AuditError::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, AuditError>;
