use serde::Serialize;
use toposlos_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: cannot read file: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("formula syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("{location}: {source}")]
    Core {
        location: String,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    pub fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid { location: location.into(), message: message.into() }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IoError",
            CliError::Json { .. } => "ParseError",
            CliError::Syntax { .. } => "SyntaxError",
            CliError::Invalid { .. } => "ValidationError",
            CliError::Core { source, .. } => source.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source: CoreError::SearchSpaceTooLarge { .. }, .. } => EXIT_RESOURCE,
            CliError::Core { source: CoreError::HypothesesNotMet(_), .. } => EXIT_CHECK_FAILED,
            _ => EXIT_INPUT,
        }
    }

    pub fn location(&self) -> String {
        match self {
            CliError::Io { path, .. } => path.clone(),
            CliError::Json { line, column, .. } => format!("line {line}, column {column}"),
            CliError::Syntax { column, .. } => format!("column {column}"),
            CliError::Invalid { location, .. } | CliError::Core { location, .. } => location.clone(),
        }
    }

    /// The message without the location prefix.
    pub fn message(&self) -> String {
        match self {
            CliError::Io { message, .. } | CliError::Json { message, .. } | CliError::Syntax { message, .. } => {
                message.clone()
            }
            CliError::Invalid { message, .. } => message.clone(),
            CliError::Core { source, .. } => source.to_string(),
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport { code: self.code(), location: self.location(), message: self.message() }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub code: &'static str,
    pub location: String,
    pub message: String,
}

/// Attaches an object path to core errors.
pub trait At<T> {
    fn at(self, location: impl Into<String>) -> Result<T, CliError>;
}

impl<T> At<T> for Result<T, CoreError> {
    fn at(self, location: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { location: location.into(), source })
    }
}

pub type CliResult<T> = Result<T, CliError>;
