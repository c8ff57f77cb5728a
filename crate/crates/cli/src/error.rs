use std::io;
use std::path::PathBuf;

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] maud_core::Error),
    /// A module error pinned to a location in a CLI input document.
    #[error("{source}")]
    Located {
        source: maud_core::Error,
        field: String,
    },
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot write output: {0}")]
    Output(#[source] io::Error),
    #[error("answer script: {message}")]
    Script {
        message: String,
        field: Option<String>,
    },
    #[error("invalid listen address `{0}`")]
    Address(String),
    #[error("service stopped: {0}")]
    Serve(#[source] io::Error),
}

impl CliError {
    pub fn script(message: impl Into<String>, field: Option<String>) -> Self {
        CliError::Script {
            message: message.into(),
            field,
        }
    }

    pub fn code(&self) -> &str {
        match self {
            CliError::Core(e) | CliError::Located { source: e, .. } => e.code(),
            CliError::Read { .. } => "read",
            CliError::Write { .. } | CliError::Output(_) => "write",
            CliError::Script { .. } => "script",
            CliError::Address(_) => "usage",
            CliError::Serve(_) => "serve",
        }
    }

    pub fn field(&self) -> Option<String> {
        match self {
            CliError::Core(e) => e.field(),
            CliError::Located { field, .. } => Some(field.clone()),
            CliError::Script { field, .. } => field.clone(),
            _ => None,
        }
    }

    /// The `{code, message, field?}` document printed on failure.
    pub fn document(&self) -> Value {
        let mut doc = json!({"code": self.code(), "message": self.to_string()});
        if let Some(field) = self.field() {
            doc["field"] = field.into();
        }
        doc
    }
}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> Self {
        CliError::Output(err)
    }
}
