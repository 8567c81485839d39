use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] proxnest::Error),

    #[error("reports come from different observations ({0} vs {1})")]
    DataMismatch(String, String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration and input problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> u8 {
        use proxnest::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Config { .. }
                | E::ShapeMismatch { .. }
                | E::InvalidArgument(_)
                | E::Unsupported(_)
                | E::NotPowerOfTwo { .. }
                | E::IncompatibleWaveletShape { .. }
                | E::Io(_) => 1,
                _ => 2,
            },
            _ => 1,
        }
    }
}
