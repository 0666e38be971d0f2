use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("illegal {player} action {action} at hour {hour}: {reason}")]
    IllegalAction {
        player: &'static str,
        action: u64,
        hour: u32,
        reason: String,
    },

    #[error("cannot step a terminal state (no hours remaining)")]
    TerminalState,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("config hash mismatch: table was built for {expected}, current config is {found}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
