//! Validator suite evaluation over a finished recording.

use std::path::Path;

use thiserror::Error;
use vtd::dmcp::ConfigError;
use vtd::recording::{read_file, RecordingError};
use vtd::scenario::{parse_scenario, validate_scenario, RouteGraph};
use vtd::validators::{evaluate_recording, SuiteError, SuiteSpec, Verdict};

use crate::{read_text, ReadError};

#[derive(Debug, Error)]
pub enum OfflineError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("{0}")]
    Scenario(String),
    #[error("suite: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("{path}: {source}")]
    Recording { path: String, source: RecordingError },
}

pub fn validate_recording(recording: &Path, scenario: &Path, suite: &Path) -> Result<Vec<Verdict>, OfflineError> {
    let scn = parse_scenario(&read_text(scenario)?).map_err(|errors| {
        OfflineError::Scenario(
            errors
                .iter()
                .map(|e| format!("{}:{e}", scenario.display()))
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })?;
    let problems = validate_scenario(&scn);
    if let Some(p) = problems.first() {
        return Err(OfflineError::Scenario(format!("{}: {p}", scenario.display())));
    }
    let graph = RouteGraph::from_scenario(&scn);
    let spec = SuiteSpec::from_config(&read_text(suite)?.parse()?)?;
    let entries = read_file(recording).map_err(|source| OfflineError::Recording {
        path: recording.display().to_string(),
        source,
    })?;
    Ok(evaluate_recording(&entries, &spec, &graph)?)
}
