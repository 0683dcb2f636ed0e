use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (gradient {residual:.3e})")]
    NoEquilibrium { iterations: usize, residual: f64 },

    #[error("axial potential has no bound minimum: {0}")]
    UnboundPotential(String),

    #[error("linear chain is unstable: smallest transverse eigenvalue ratio {margin:.3e}")]
    ZigzagInstability { margin: f64 },

    #[error("tone {tone} collides with mode {mode} (|mu - omega| = {gap:.3e} rad/s)")]
    ScheduleCollision { tone: usize, mode: usize, gap: f64 },

    #[error("tone {tone} is resonant with mode {mode}")]
    Resonance { tone: usize, mode: usize },

    #[error("no multistart run converged (best relative residual {best_residual:.3e})")]
    NoConvergence { best_residual: f64 },

    #[error("system of {n} spins exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("target graph: {0}")]
    Graph(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical stage, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoEquilibrium { .. }
                | Error::ZigzagInstability { .. }
                | Error::ScheduleCollision { .. }
                | Error::Resonance { .. }
                | Error::NoConvergence { .. }
        )
    }
}
