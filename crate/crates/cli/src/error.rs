use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration; `line` points into the config file when known.
    #[error("{}", config_message(.line, .msg))]
    Config { line: Option<usize>, msg: String },

    #[error("sampling set is not a CIS: {0}")]
    NotCis(String),

    #[error("numerical residual check failed: {0}")]
    Residual(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] pns_core::Error),
}

fn config_message(line: &Option<usize>, msg: &str) -> String {
    match line {
        Some(line) => format!("config line {line}: {msg}"),
        None => format!("config: {msg}"),
    }
}

impl CliError {
    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Config {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 2 config error, 3 not a CIS, 4 residual failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use pns_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::NotCis(_) => 3,
            CliError::Residual(_) => 4,
            CliError::Core(E::SingularPolyphase { .. }) => 3,
            CliError::Core(E::CoefficientSupport { .. } | E::KernelStructure(_)) => 4,
            CliError::Core(E::Serialization(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
