//! Replays a recording file onto a live conference.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vtd::bus::{ConferenceId, UdpConference, UdpOptions};
use vtd::recording::RecordingReader;
use vtd_tools::play::replay;

#[derive(Parser)]
#[command(version, about = "Play a recording")]
struct Cli {
    #[arg(long = "in")]
    input: PathBuf,
    /// Conference group, 1..=254.
    #[arg(long)]
    conference: u32,
    /// Replay speed factor; 0 sends as fast as possible.
    #[arg(long, default_value_t = 1.0)]
    timescale: f64,
    /// Use the loopback interface instead of the default route.
    #[arg(long)]
    loopback: bool,
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let reader = RecordingReader::open(&cli.input)?;
    let conference = UdpConference::join(ConferenceId::new(cli.conference)?, UdpOptions { loopback: cli.loopback })?;
    let stats = replay(reader, cli.timescale, |e| conference.send_frame(&e.frame))?;
    eprintln!(
        "played {} containers spanning {:.3} s in {:.3} s",
        stats.entries,
        stats.recorded.as_secs_f64(),
        stats.elapsed.as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    vtd_tools::init_logging();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("play: {e}");
            ExitCode::FAILURE
        }
    }
}
