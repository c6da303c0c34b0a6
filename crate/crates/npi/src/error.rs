use std::path::PathBuf;

use crate::config::Diagnostic;

#[derive(Debug, thiserror::Error)]
pub enum NpiError {
    #[error(transparent)]
    Core(#[from] npi_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint was written for a different system (spec hash mismatch)")]
    SpecMismatch,
    #[error("{} configuration error(s):\n{}", .0.len(), render_diagnostics(.0))]
    Config(Vec<Diagnostic>),
    #[error("cannot compare runs: {0}")]
    Incompatible(String),
    #[error("{0}")]
    Serialization(String),
}

fn render_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

impl NpiError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit status: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, NpiError>;
