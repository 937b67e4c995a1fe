use std::fmt;

use thiserror::Error;

/// Failures that map onto documented process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Config(Issues),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    pub fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config(Issues(vec![Issue { path: path.to_string(), message: message.into() }]))
    }
}

/// One configuration problem, addressed by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Issues(pub Vec<Issue>);

impl Issues {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Issue { path: path.into(), message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn paths(&self) -> Vec<&str> {
        self.0.iter().map(|i| i.path.as_str()).collect()
    }

    pub fn into_result(self) -> Result<(), CliError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self))
        }
    }
}

impl fmt::Display for Issues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {}: {}", issue.path, issue.message)?;
        }
        Ok(())
    }
}

/// Exit code for an error chain: the first [`CliError`] found decides,
/// anything else is a generic failure.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    err.chain().find_map(|e| e.downcast_ref::<CliError>()).map_or(1, CliError::exit_code)
}
