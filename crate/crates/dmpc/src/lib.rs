//! Command-line driver for `dmpc-core`: scenario and weather files, trace
//! and metrics output, and a rayon executor for the per-zone fan-out.

pub mod cli;
pub mod exec;
pub mod formats;

use dmpc_core::comfort::ComfortError;
use dmpc_core::mpc::MpcError;
use dmpc_core::sim::SimError;
use std::path::PathBuf;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Comfort(#[from] ComfortError),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Config(_) => exit::CONFIG,
            Error::Numerical(_) => exit::NUMERICAL,
            Error::Sim(e) => match e {
                SimError::Scenario(_) | SimError::Thermal(_) => exit::CONFIG,
                SimError::Comfort(c) => comfort_code(c),
                SimError::Solve { source: MpcError::Config(_), .. } => exit::CONFIG,
                SimError::Solve { .. } => exit::NUMERICAL,
            },
            Error::Comfort(c) => comfort_code(c),
        }
    }
}

fn comfort_code(e: &ComfortError) -> i32 {
    match e {
        ComfortError::InvalidParameter { .. } | ComfortError::SplitOutsideDomain(..) => exit::CONFIG,
        _ => exit::NUMERICAL,
    }
}
