use std::path::PathBuf;

use rocrecal_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("calibrator file, line {line}: {message}")]
    CalibratorFormat { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("repetition {rep}: {source}")]
    Rep {
        rep: usize,
        #[source]
        source: Box<AppError>,
    },
}

impl AppError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn core(context: impl Into<String>, source: CoreError) -> Self {
        AppError::Core {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core { source, .. } => match source.root() {
                CoreError::MissingLabel(_)
                | CoreError::UnknownStratum(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::LengthMismatch { .. }
                | CoreError::BadWeight(_)
                | CoreError::BadMode(_)
                | CoreError::InvalidParameter { .. }
                | CoreError::InfeasibleSpec(_) => 2,
                _ => 3,
            },
            AppError::Rep { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub(crate) trait CoreContext<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> CoreContext<T> for std::result::Result<T, CoreError> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| AppError::core(what, e))
    }
}
