use std::path::PathBuf;

use stageccd::CcdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CcdError),

    #[error("writing {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 0 success, 2 config error, 3 infeasible, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CcdError::InvalidParams(_)
                | CcdError::Dimension(_)
                | CcdError::Parse(_)
                | CcdError::Json(_)
                | CcdError::Io(_)
                | CcdError::InvalidMatrix(_)
                | CcdError::InsufficientModes { .. } => 2,
                CcdError::InnerInfeasible { .. } => 3,
                _ => 4,
            },
            CliError::Output { .. } => 2,
        }
    }
}
