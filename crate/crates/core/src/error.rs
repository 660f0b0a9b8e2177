use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("matrix is singular or rank deficient (eigenvalue ratio {ratio:e})")]
    Singular { ratio: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("drop {index}: {source}")]
    Drop {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) => 4,
            Error::Drop { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub(crate) fn at_drop(self, index: u64) -> Error {
        Error::Drop {
            index,
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("key `{key}` is out of range: {bound}")]
    OutOfRange { key: &'static str, bound: String },

    #[error("key `{key}`: cannot parse `{value}`")]
    Parse { key: String, value: String },

    #[error("line {0}: expected `key = value`")]
    Syntax(usize),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
