use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    InvalidUtf8 { path: PathBuf, line: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: no corpus token at sentence {sentence_id}, position {position}", path.display())]
    UnknownOccurrence {
        path: PathBuf,
        line: usize,
        sentence_id: u32,
        position: u32,
    },

    #[error("{}:{line}: word {found:?} does not match corpus token {expected:?}", path.display())]
    WordMismatch {
        path: PathBuf,
        line: usize,
        expected: String,
        found: String,
    },

    #[error(
        "{}:{line}: sentence {sentence_id}, position {position} already labeled {existing:?}, got {label:?}",
        path.display()
    )]
    ConflictingLabel {
        path: PathBuf,
        line: usize,
        sentence_id: u32,
        position: u32,
        existing: String,
        label: String,
    },

    #[error("bad magic {found:?}, expected \"ECX1\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported ECX version {found}")]
    UnsupportedVersion { found: u16 },

    #[error("unsupported ECX flags {found:#06x}")]
    UnsupportedFlags { found: u16 },

    #[error("truncated ECX file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("ECX file has {actual} bytes, expected exactly {expected}")]
    TrailingBytes { expected: u64, actual: u64 },

    #[error("non-finite value in record {record}, layer {layer}, component {component}")]
    NonFinite {
        record: usize,
        layer: usize,
        component: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("layer {layer} out of range for a dataset with {num_layers} layers")]
    LayerOutOfRange { layer: usize, num_layers: usize },

    #[error("clustering input is empty")]
    EmptyInput,

    #[error("non-finite clustering input at row {row}, column {column}")]
    NonFiniteInput { row: usize, column: usize },

    #[error("K = {k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// True for errors that indicate a bug rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::Stage { source, .. } => source.is_invariant_violation(),
            _ => false,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
