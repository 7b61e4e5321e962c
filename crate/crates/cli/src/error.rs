use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Physics(#[from] trimode_core::Error),

    #[error("{context} {}: {source}", path.display())]
    Io {
        context: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },

    /// The command ran but its report signals failure (unstable point,
    /// failed invariant). The report has already been emitted.
    #[error("{0}")]
    Verdict(String),
}

impl CliError {
    /// Stable exit-code contract: 2 config, 3 physics, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Physics(_) | Self::Verdict(_) => 3,
            Self::Io { .. } => 4,
        }
    }

    pub fn io(context: &'static str, path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { context, path, source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
