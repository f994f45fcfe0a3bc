use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),
    #[error("parse error at data row {row}, column `{column}`: cannot read `{value}` as a finite number")]
    Parse { row: usize, column: String, value: String },
    #[error("integrity error: duplicate point id {0}")]
    DuplicateId(u64),
    #[error("invalid pattern: {0}")]
    Pattern(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("level {level} out of range (tree height {height})")]
    LevelOutOfRange { level: u32, height: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("oracle refused: catalog has {size} points, cap is {cap}")]
    OracleCap { size: usize, cap: usize },
    #[error("worker {worker} panicked: {message}")]
    WorkerPanic { worker: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
