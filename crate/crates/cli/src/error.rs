use thiserror::Error;

/// Input errors; every variant maps to exit status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{object}: {source}")]
    Invalid {
        object: String,
        #[source]
        source: qmi_core::Error,
    },

    #[error("{object}: unknown {kind} {name:?}")]
    Dangling {
        object: String,
        kind: &'static str,
        name: String,
    },

    #[error("constant-state instruments form a cycle: {0:?}")]
    Cycle(Vec<String>),

    #[error("invalid QMI_TOL value {0:?}")]
    EnvTolerance(String),

    #[error(transparent)]
    Core(#[from] qmi_core::Error),

    #[error("cannot write report {path}: {message}")]
    Report { path: String, message: String },
}

impl CliError {
    pub fn invalid(object: &str, source: qmi_core::Error) -> Self {
        CliError::Invalid {
            object: object.to_string(),
            source,
        }
    }
}
