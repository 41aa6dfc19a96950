use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}, column `{column}`: {message}")]
    Validation {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: duplicate id {id}")]
    DuplicateId { row: usize, id: u32 },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown model id {0}")]
    UnknownModel(u32),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("accuracy undefined: every evaluated pair is tied")]
    UndefinedAccuracy,

    #[error("run {run} (seed {seed}): {source}")]
    Run {
        run: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
