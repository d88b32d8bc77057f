use std::path::PathBuf;

/// Errors produced anywhere in the feature-generation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error{}: {message}", location(.row, .column))]
    Schema {
        message: String,
        row: Option<usize>,
        column: Option<String>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("operator {op} cannot be applied here: {reason}")]
    InvalidOperator { op: String, reason: String },

    #[error("no partner of kind {kind} for feature {focal}")]
    NoPartner { focal: usize, kind: String },

    #[error("class {class:?} has {count} members, fewer than the {folds} folds requested")]
    SmallClass {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("degenerate target: all true values are identical")]
    DegenerateTarget,

    #[error("metric/task mismatch: {0}")]
    MetricTaskMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cannot parse expression at byte {pos}: {message}")]
    Expression { pos: usize, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training split of fold {fold} lacks class {class}")]
    MissingTrainingClass { fold: usize, class: usize },
}

fn location(row: &Option<usize>, column: &Option<String>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" (row {r}, column {c:?})"),
        (Some(r), None) => format!(" (row {r})"),
        (None, Some(c)) => format!(" (column {c:?})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn schema(message: impl Into<String>) -> Self {
        Error::Schema {
            message: message.into(),
            row: None,
            column: None,
        }
    }

    pub(crate) fn schema_at(message: impl Into<String>, row: usize, column: &str) -> Self {
        Error::Schema {
            message: message.into(),
            row: Some(row),
            column: Some(column.to_string()),
        }
    }

    /// True for errors caused by the input data or schema (as opposed to
    /// configuration or runtime failures).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Csv(_)
                | Error::Io { .. }
                | Error::SmallClass { .. }
                | Error::DegenerateTarget
                | Error::Empty(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
