//! Runs one virtual test drive and exits 0 if it passed, 1 if a validator
//! failed and 2 if the run could not be set up.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vtd_tools::simrun::{exit_code, simrun, SimrunArgs};
use vtd_tools::EXIT_SETUP;

#[derive(Parser)]
#[command(version, about = "Run a virtual test drive")]
struct Cli {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    situation: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    suite: PathBuf,
    /// Output directory for report.txt, recording.rec and trace.csv.
    #[arg(long)]
    out: PathBuf,
    /// Overrides simulation.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write per-slice vehicle poses to trace.csv.
    #[arg(long)]
    dump_trace: bool,
}

fn main() -> ExitCode {
    vtd_tools::init_logging();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_SETUP as u8 } else { 0 });
        }
    };
    let args = SimrunArgs {
        scenario: cli.scenario,
        situation: cli.situation,
        config: cli.config,
        suite: cli.suite,
        out: cli.out,
        seed: cli.seed,
        dump_trace: cli.dump_trace,
    };
    let result = simrun(&args);
    match &result {
        Ok(report) => print!("{report}"),
        Err(e) => eprintln!("simrun: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
