//! Config-driven pipeline behind the `ionspin` binary.

pub mod config;
pub mod pipeline;

pub use config::{GraphSpec, RunConfig};
pub use pipeline::{emit_plotdata, run_design, run_scaling, DesignSummary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: ionspin::Error,
    },
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { source, .. } if source.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for ionspin::Result<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage: name, source })
    }
}
