use thiserror::Error;

pub type Result<T> = std::result::Result<T, PaucError>;

#[derive(Debug, Error)]
pub enum PaucError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: label out of {{0,1}} (got `{value}`)")]
    LabelOutOfRange { row: usize, value: String },

    #[error("single-class data: {n_pos} positives, {n_neg} negatives")]
    SingleClass { n_pos: usize, n_neg: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} {class} instances but only {available} are available")]
    OversizedBatch {
        class: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("split too small: `{split}` would hold {n_pos} positives and {n_neg} negatives")]
    SplitTooSmall {
        split: &'static str,
        n_pos: usize,
        n_neg: usize,
    },

    #[error("selection size floor({n} * {fraction}) is zero")]
    EmptySelection { n: usize, fraction: f64 },

    #[error("empty class in {0}")]
    EmptyClass(&'static str),

    #[error("no selection weight for instance {0}")]
    MissingWeight(usize),
}

impl PaucError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PaucError::InvalidParameter(msg.into())
    }
}
