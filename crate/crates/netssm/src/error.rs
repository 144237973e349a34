use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: file not found", path.display())]
    NotFound { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Dimension { path: PathBuf, message: String },
    /// Every violated field, in declaration order.
    #[error("{}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] netssm_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound { path }
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Stable short name used as the CLI error prefix.
    pub fn category(&self) -> &'static str {
        use netssm_core::Error as C;
        match self {
            Error::NotFound { .. } => "not-found",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Dimension { .. } => "dimension",
            Error::Config(_) => "config",
            Error::Core(e) => match e {
                C::NonFinite { .. } => "numeric",
                C::Domain { .. } | C::InvalidSimplex { .. } | C::SelfLoop { .. } => "domain",
                _ => "dimension",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
