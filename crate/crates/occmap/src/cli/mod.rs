//! Command-line entry points, file formats, rendering and reports.

pub mod commands;
pub mod config;
pub mod formats;
pub mod records;
pub mod render;
pub mod report;

use thiserror::Error;

/// Process exit codes: 0 ok, 1 usage, 2 data error, 3 runtime.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::world::WorldError> for CliError {
    fn from(e: crate::world::WorldError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::explore::ExploreError> for CliError {
    fn from(e: crate::explore::ExploreError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::anticipate::AnticipateError> for CliError {
    fn from(e: crate::anticipate::AnticipateError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::dataset::DatasetError> for CliError {
    fn from(e: crate::dataset::DatasetError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::grid::GridError> for CliError {
    fn from(e: crate::grid::GridError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
