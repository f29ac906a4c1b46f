use std::fmt::Display;
use std::path::Path;

use serde::Serialize;

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Data,
    Stage,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Stage => 4,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    /// Prompt of a failed generation, kept for an offline retry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
            stage: None,
            prompt: None,
        }
    }

    pub fn usage(message: impl Display) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn data(message: impl Display) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    /// Writes `error.json` into `dir`.
    pub fn write_artifact(&self, dir: &Path) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Artifact<'a> {
            exit_code: u8,
            #[serde(flatten)]
            error: &'a CliError,
        }
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&Artifact {
            exit_code: self.kind.exit_code(),
            error: self,
        })
        .map_err(std::io::Error::from)?;
        std::fs::write(dir.join(crate::ERROR_FILE), text + "\n")
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Attaches context and the data exit code to a library error.
pub trait DataContext<T> {
    fn data_context(self, what: impl Display) -> Result<T, CliError>;
}

impl<T, E: Display> DataContext<T> for Result<T, E> {
    fn data_context(self, what: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::data(format!("{what}: {e}")))
    }
}
