use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: missing column \"{column}\"")]
    MissingColumn { column: String },

    #[error("parse error at data row {row}, column \"{column}\": cannot parse {value:?}")]
    Parse { row: usize, column: String, value: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("need at least {needed} distinct values, found {found}")]
    TooFewDistinct { needed: usize, found: usize },

    #[error("level(s) {missing:?} absent from the estimation frame")]
    MissingLevels { missing: Vec<u8> },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("singular matrix; near-null direction {direction:?}")]
    Singular { direction: Vec<(String, f64)> },

    #[error("log-likelihood {ll} is below the null value {ll_null}")]
    BelowNull { ll: f64, ll_null: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
