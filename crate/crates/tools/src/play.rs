//! Replays a recording file, pacing sends by the recorded capture times.

use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use vtd::bus::BusError;
use vtd::recording::{Entry, RecordingError};

#[derive(Debug, Error)]
pub enum PlayError {
    #[error("time scale must be a finite value >= 0, got {0}")]
    InvalidTimeScale(f64),
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error("send failed: {0}")]
    Send(#[from] BusError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayStats {
    pub entries: u64,
    /// Recorded span between the first and last entry.
    pub recorded: Duration,
    pub elapsed: Duration,
}

/// Hands every entry's frame to `send`, entry `k` no earlier than
/// `(t_k - t_0) / time_scale` after the first. A scale of 0 sends as fast
/// as possible. Stops at the first malformed entry; earlier entries have
/// been sent by then.
pub fn replay<I, F>(entries: I, time_scale: f64, mut send: F) -> Result<PlayStats, PlayError>
where
    I: IntoIterator<Item = Result<Entry, RecordingError>>,
    F: FnMut(&Entry) -> Result<(), BusError>,
{
    if !(time_scale >= 0.0 && time_scale.is_finite()) {
        return Err(PlayError::InvalidTimeScale(time_scale));
    }
    let start = Instant::now();
    let mut first = None;
    let mut last = 0;
    let mut count = 0;
    for entry in entries {
        let entry = entry?;
        let t0 = *first.get_or_insert(entry.timestamp);
        last = entry.timestamp;
        if time_scale > 0.0 {
            let offset_us = (entry.timestamp - t0) as f64 / time_scale;
            let due = start + Duration::from_secs_f64(offset_us.max(0.0) / 1e6);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        send(&entry)?;
        count += 1;
    }
    Ok(PlayStats {
        entries: count,
        recorded: Duration::from_micros(first.map_or(0, |t0| (last - t0).max(0) as u64)),
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vtd::serialization::Container;

    fn entry(t: i64) -> Result<Entry, RecordingError> {
        Ok(Entry {
            timestamp: t,
            frame: Container::new(100, t, Vec::new()).encode(),
        })
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(matches!(
            replay(Vec::new(), -1.0, |_| Ok(())),
            Err(PlayError::InvalidTimeScale(_))
        ));
        assert!(replay(Vec::new(), f64::NAN, |_| Ok(())).is_err());
    }

    #[test]
    fn empty_recording_is_immediate() {
        let stats = replay(Vec::new(), 1.0, |_| Ok(())).unwrap();
        assert_eq!(stats.entries, 0);
        assert!(stats.elapsed < Duration::from_millis(50));
    }

    #[test]
    fn unpaced_sends_all_in_order() {
        let mut seen = Vec::new();
        let stats = replay((0..5).map(|k| entry(k * 1_000_000)), 0.0, |e| {
            seen.push(e.timestamp);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, [0, 1_000_000, 2_000_000, 3_000_000, 4_000_000]);
        assert_eq!(stats.recorded, Duration::from_secs(4));
        assert!(stats.elapsed < Duration::from_millis(100));
    }

    #[test]
    fn stops_at_malformed_entry() {
        let entries = vec![entry(0), Err(RecordingError::Truncated { offset: 28 }), entry(5)];
        let mut sent = 0;
        let r = replay(entries, 0.0, |_| {
            sent += 1;
            Ok(())
        });
        assert!(matches!(r, Err(PlayError::Recording(RecordingError::Truncated { offset: 28 }))));
        assert_eq!(sent, 1);
    }
}
