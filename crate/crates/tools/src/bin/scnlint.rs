//! Checks a scenario or situation file; exits 0 iff it is clean.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vtd::scenario::parse_scenario;
use vtd_tools::lint::lint;
use vtd_tools::{read_text, EXIT_FAIL, EXIT_SETUP};

#[derive(Parser)]
#[command(version, about = "Lint scenario (.scn) and situation (.sit) files")]
struct Cli {
    file: PathBuf,
    /// Scenario to resolve a situation's waypoint and polygon references against.
    #[arg(long)]
    scenario: Option<PathBuf>,
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
    let scenario = match &cli.scenario {
        None => None,
        Some(path) => match read_text(path).map(|t| parse_scenario(&t)) {
            Ok(Ok(s)) => Some(s),
            Ok(Err(errors)) => {
                for e in errors {
                    eprintln!("{}:{e}", path.display());
                }
                return ExitCode::from(EXIT_SETUP as u8);
            }
            Err(e) => {
                eprintln!("scnlint: {e}");
                return ExitCode::from(EXIT_SETUP as u8);
            }
        },
    };
    let text = match read_text(&cli.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("scnlint: {e}");
            return ExitCode::from(EXIT_SETUP as u8);
        }
    };
    match lint(&cli.file.display().to_string(), &text, scenario.as_ref()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(problems) => {
            for p in problems {
                println!("{p}");
            }
            ExitCode::from(EXIT_FAIL as u8)
        }
    }
}
