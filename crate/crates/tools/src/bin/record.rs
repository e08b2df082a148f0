//! Records every container on a live conference into a recording file.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use vtd::bus::{Conference, ConferenceId, DataStore, Filter, UdpConference, UdpOptions};
use vtd::recording::RecordingWriter;
use vtd_tools::record::{record, wall_clock_us, RecordLimits};

#[derive(Parser)]
#[command(version, about = "Record a conference")]
struct Cli {
    /// Conference group, 1..=254.
    #[arg(long)]
    conference: u32,
    #[arg(long)]
    out: PathBuf,
    /// Stop after this many seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Stop after this many containers.
    #[arg(long)]
    count: Option<u64>,
    /// Use the loopback interface instead of the default route.
    #[arg(long)]
    loopback: bool,
}

fn run(cli: Cli) -> Result<u64, Box<dyn std::error::Error>> {
    let duration = match cli.duration {
        Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(format!("--duration must be >= 0, got {s}").into()),
        None => None,
    };
    let conference = UdpConference::join(ConferenceId::new(cli.conference)?, UdpOptions { loopback: cli.loopback })?;
    let store = Arc::new(DataStore::fifo());
    conference.add_listener(Filter::All, Arc::clone(&store))?;
    let mut writer = RecordingWriter::create(&cli.out)?;
    let limits = RecordLimits {
        duration,
        max_entries: cli.count,
    };
    Ok(record(&store, &mut writer, limits, wall_clock_us)?)
}

fn main() -> ExitCode {
    vtd_tools::init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(n) => {
            eprintln!("recorded {n} containers");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("record: {e}");
            ExitCode::FAILURE
        }
    }
}
