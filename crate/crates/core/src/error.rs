use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit
/// category (see [`Error::category`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("valence {value} for '{term}' is outside [0, 10]")]
    ValenceOutOfRange { term: String, value: f64 },

    #[error("duplicate term '{0}'")]
    DuplicateTerm(String),

    #[error("invalid lexicon entry: {0}")]
    InvalidEntry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lexicon class '{0}' is empty")]
    EmptyClass(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("no usable iteration: all {0} iterations matched fewer than 2 test terms")]
    NoSignal(usize),

    #[error("gazetteer entry '{location}' breaks NUTS nesting ({detail})")]
    Nesting { location: String, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Coarse failure category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Invariant,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => Category::Config,
            Error::Invariant(_) => Category::Invariant,
            _ => Category::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
