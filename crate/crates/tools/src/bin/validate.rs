//! Evaluates a validator suite over a recording file. Exit status follows
//! simrun: 0 all passed, 1 a verdict failed, 2 bad input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vtd_tools::offline::validate_recording;
use vtd_tools::{EXIT_FAIL, EXIT_SETUP};

#[derive(Parser)]
#[command(version, about = "Validate a recording offline")]
struct Cli {
    recording: PathBuf,
    scenario: PathBuf,
    suite: PathBuf,
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
    match validate_recording(&cli.recording, &cli.scenario, &cli.suite) {
        Ok(verdicts) => {
            for v in &verdicts {
                println!("{v}");
            }
            let passed = verdicts.iter().all(|v| v.passed());
            println!("VALIDATION {}", if passed { "PASSED" } else { "FAILED" });
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL as u8)
            }
        }
        Err(e) => {
            eprintln!("validate: {e}");
            ExitCode::from(EXIT_SETUP as u8)
        }
    }
}
