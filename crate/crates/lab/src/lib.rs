//! Experiment runner: TOML configs in, CSV tables and JSON manifests out.

use std::fmt;

pub mod cache;
pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod generators;
pub mod output;

pub use config::{ExperimentConfig, LoadedConfig};
pub use output::{RunOptions, RunSummary, Table};

#[derive(Debug)]
pub enum LabError {
    /// Unparsable or inconsistent configuration.
    Config(String),
    Core(gaplab_core::Error),
    Io(String),
    /// Fixture outputs differ from the frozen ones.
    Mismatch(String),
}

impl LabError {
    /// 1 invalid config, 2 resource cap, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use gaplab_core::Error as E;
        match self {
            LabError::Core(E::CapExceeded { .. }) => 2,
            LabError::Core(E::NotConverged { .. } | E::Degenerate(_) | E::NoCertificate { .. }) => 3,
            LabError::Mismatch(_) => 3,
            LabError::Config(_) | LabError::Core(_) | LabError::Io(_) => 1,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "invalid config: {m}"),
            LabError::Core(e) => write!(f, "{e}"),
            LabError::Io(m) => write!(f, "io: {m}"),
            LabError::Mismatch(m) => write!(f, "fixture mismatch: {m}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<gaplab_core::Error> for LabError {
    fn from(e: gaplab_core::Error) -> Self {
        LabError::Core(e)
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
