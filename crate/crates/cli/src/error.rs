use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] wavepacket_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed")]
    GateFailure,
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 configuration or model-domain error, 2 failed verification gate, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 1,
            CliError::GateFailure => 2,
            CliError::Io { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
