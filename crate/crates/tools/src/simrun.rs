//! Unattended simulation runs: load the world, run every SUT vehicle with
//! the autopilot, record the bus, and judge the run with a validator suite.
//!
//! Output directory layout: `report.txt` (the run report), `recording.rec`
//! (every delivered container) and, with `dump_trace`, `trace.csv`.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;
use vtd::dmcp::{ConfigError, ConfigurationSet};
use vtd::scenario::{parse_scenario, parse_situation, SyntaxError};
use vtd::sim::{
    run_multi_vehicle, ActivePart, Autopilot, ObserverPart, Recorder, RunReport, RunSetup, SimError, SutFactory,
    TraceDump, ValidatorHost, World,
};
use vtd::validators::{SuiteError, SuiteSpec};

use crate::{read_text, ReadError, EXIT_FAIL, EXIT_PASS, EXIT_SETUP};

pub const REPORT_FILE: &str = "report.txt";
pub const RECORDING_FILE: &str = "recording.rec";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Clone)]
pub struct SimrunArgs {
    pub scenario: PathBuf,
    pub situation: PathBuf,
    pub config: PathBuf,
    pub suite: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub dump_trace: bool,
}

/// Anything that stops a run from starting. All map to exit status 2.
#[derive(Debug, Error)]
pub enum SimrunError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("{}", syntax_lines(path, errors))]
    Syntax { path: PathBuf, errors: Vec<SyntaxError> },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("suite: {0}")]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("output {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

fn syntax_lines(path: &Path, errors: &[SyntaxError]) -> String {
    errors
        .iter()
        .map(|e| format!("{}:{e}", path.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn config(path: &Path) -> Result<ConfigurationSet, SimrunError> {
    read_text(path)?.parse().map_err(|source| SimrunError::Config {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: PathBuf) -> Result<BufWriter<File>, SimrunError> {
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| SimrunError::Output { path, source })
}

/// The stock SUT: one autopilot per externally driven vehicle.
pub fn autopilot_factory() -> SutFactory {
    Box::new(|id, world: &World| vec![Box::new(Autopilot::new(id, Arc::clone(&world.graph))) as Box<dyn ActivePart>])
}

/// Runs and writes the output files. The report is returned whether or
/// not the run passed.
pub fn simrun(args: &SimrunArgs) -> Result<RunReport, SimrunError> {
    let scenario_text = read_text(&args.scenario)?;
    let situation_text = read_text(&args.situation)?;
    let master = config(&args.config)?;
    let suite = SuiteSpec::from_config(&config(&args.suite)?)?;
    let scenario = parse_scenario(&scenario_text).map_err(|errors| SimrunError::Syntax {
        path: args.scenario.clone(),
        errors,
    })?;
    let situation = parse_situation(&situation_text).map_err(|errors| SimrunError::Syntax {
        path: args.situation.clone(),
        errors,
    })?;
    let setup = RunSetup::new(World::new(scenario, situation)?, master, args.seed)?;
    let checks = setup
        .world
        .sut_vehicles()
        .into_iter()
        .map(|id| suite.instantiate(&setup.world.graph, id))
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(&args.out).map_err(|source| SimrunError::Output {
        path: args.out.clone(),
        source,
    })?;
    let mut observers: Vec<Box<dyn ObserverPart>> = vec![
        Box::new(Recorder::new(create(args.out.join(RECORDING_FILE))?)),
        Box::new(ValidatorHost::new(checks)),
    ];
    if args.dump_trace {
        observers.push(Box::new(TraceDump::new(create(args.out.join(TRACE_FILE))?)));
    }
    let factories: Vec<SutFactory> = setup.world.sut_vehicles().iter().map(|_| autopilot_factory()).collect();
    let report = run_multi_vehicle(&setup, &factories, observers)?;
    let report_path = args.out.join(REPORT_FILE);
    fs::write(&report_path, report.to_string()).map_err(|source| SimrunError::Output {
        path: report_path,
        source,
    })?;
    Ok(report)
}

pub fn exit_code(result: &Result<RunReport, SimrunError>) -> i32 {
    match result {
        Ok(r) if r.passed() => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(_) => EXIT_SETUP,
    }
}
