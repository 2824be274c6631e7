use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid language code: {0:?}")]
    InvalidCode(String),
    #[error("document language undefined: no sentence predictions")]
    UndefinedLanguage,
    #[error("questionable score undefined: document has no sentences")]
    UndefinedScore,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("stage `{stage}` failed on shard {shard}: {message}")]
    Stage {
        stage: String,
        shard: usize,
        message: String,
    },
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidCode(_) => 2,
            Error::Stage { .. } => 4,
            _ => 3,
        }
    }
}
