use casimir_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("numerical failure ({context}): {source}")]
    Numerical { context: String, source: CoreError },
    #[error("{0} propert{} failed", if *.0 == 1 { "y" } else { "ies" })]
    PropertyFailure(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Config { line, message: message.into() }
    }

    pub fn from_core_config(e: CoreError) -> Self {
        match e {
            CoreError::Parse { line, message } => CliError::Config { line: Some(line), message },
            other => CliError::Config { line: None, message: other.to_string() },
        }
    }

    pub fn numerical(context: impl Into<String>) -> impl FnOnce(CoreError) -> Self {
        let context = context.into();
        move |source| CliError::Numerical { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::PropertyFailure(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } | CliError::Io(_) => 3,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
