use std::io;
use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// Malformed input file. `line` is 1-based; `token` is the 1-based
    /// position of the offending token on that line, when there is one.
    #[error("{}:{line}{}: {message}", path.display(), token.map(|t| format!(", token {t}")).unwrap_or_default())]
    Format {
        path: PathBuf,
        line: usize,
        token: Option<usize>,
        message: String,
    },
    #[error("{}: expected {expected} values, found {found}", path.display())]
    Count {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sparsect_core::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Whether the error stems from bad or missing input rather than from the
    /// computation itself.
    pub fn is_input_error(&self) -> bool {
        match self {
            Self::Io { source, .. } => source.kind() == io::ErrorKind::NotFound,
            Self::Format { .. } | Self::Count { .. } | Self::Config(_) => true,
            Self::Core(_) => false,
        }
    }
}
