//! Orchestration of evaluation runs: configuration, on-disk datasets and
//! reports, and the `causeval` subcommands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod report;

use std::path::PathBuf;

use causeval_core::causation::CausationError;
use causeval_core::llm::LlmError;
use causeval_core::metrics::MetricsError;
use causeval_core::problems::ProblemError;
use causeval_core::scm::ScmError;
use thiserror::Error;

pub use config::{Overrides, RunConfig, TruthReference};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("missing input {} (run `{command}` first)", path.display())]
    MissingInput {
        path: PathBuf,
        command: &'static str,
    },
    #[error("{}: unsupported schema version {found} (this build reads version {expected})", path.display())]
    Schema {
        path: PathBuf,
        found: u64,
        expected: u64,
    },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Causation(#[from] CausationError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> HarnessError {
        HarnessError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
