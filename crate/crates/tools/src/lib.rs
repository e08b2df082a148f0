//! Operator tools around the simulation core: a live recorder and player
//! for recording files, the unattended simulation runner, a scenario
//! linter and an offline validator.
//!
//! The binaries in `src/bin` only parse arguments and map results to exit
//! codes; the work happens here so it can be tested in-process.

pub mod lint;
pub mod offline;
pub mod play;
pub mod record;
pub mod simrun;

use std::path::{Path, PathBuf};

use thiserror::Error;

/// Exit status of a run that passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status when the run completed but a verdict failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for usage, input and setup problems.
pub const EXIT_SETUP: i32 = 2;

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct ReadError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

pub fn read_text(path: &Path) -> Result<String, ReadError> {
    std::fs::read_to_string(path).map_err(|source| ReadError {
        path: path.to_path_buf(),
        source,
    })
}

/// Initializes logging from `RUST_LOG`, warnings by default.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
}
