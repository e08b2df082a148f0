//! Captures a live conference into a recording file.

use std::io::Write;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use vtd::bus::DataStore;
use vtd::recording::{RecordingError, RecordingWriter};

/// When to stop; with neither limit set, recording runs until the process
/// is killed. Every entry is flushed as it is written.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordLimits {
    pub duration: Option<Duration>,
    pub max_entries: Option<u64>,
}

/// Wall clock in microseconds since the epoch.
pub fn wall_clock_us() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_micros() as i64)
}

const POLL: Duration = Duration::from_millis(100);

/// Moves containers from `store` into `writer`, stamping each with the
/// time it was taken from the store. Stamps are clamped so they never
/// decrease even if the wall clock steps back.
pub fn record<W: Write>(
    store: &DataStore,
    writer: &mut RecordingWriter<W>,
    limits: RecordLimits,
    clock: impl Fn() -> i64,
) -> Result<u64, RecordingError> {
    let deadline = limits.duration.map(|d| Instant::now() + d);
    let mut last = i64::MIN;
    let mut count = 0;
    loop {
        if limits.max_entries.is_some_and(|m| count >= m) {
            break;
        }
        let wait = match deadline {
            Some(d) => {
                let left = d.saturating_duration_since(Instant::now());
                if left.is_zero() {
                    break;
                }
                left.min(POLL)
            }
            None => POLL,
        };
        let Some(container) = store.wait_take(wait) else {
            continue;
        };
        last = last.max(clock());
        writer.append(last, &container)?;
        writer.flush()?;
        count += 1;
    }
    writer.flush()?;
    Ok(count)
}
