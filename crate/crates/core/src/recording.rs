//! Recording files: a stream of entries, each an `i64` little-endian
//! capture timestamp in microseconds followed by one container frame.
//!
//! There is no file header or index; an empty file is an empty recording.
//! Capture timestamps never decrease.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::serialization::{Container, DecodeError, FRAME_HEADER_LEN, FRAME_MAGIC};

#[derive(Debug, Error)]
pub enum RecordingError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("entry at byte offset {offset}: {source}")]
    Frame { offset: u64, source: DecodeError },
    #[error("entry at byte offset {offset} truncated")]
    Truncated { offset: u64 },
    #[error("entry at byte offset {offset}: timestamp {found} precedes {previous}")]
    NonMonotonic { offset: u64, previous: i64, found: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub timestamp: i64,
    /// The frame bytes exactly as stored.
    pub frame: Vec<u8>,
}

impl Entry {
    pub fn container(&self) -> Result<Container, DecodeError> {
        Container::decode(&self.frame)
    }
}

pub struct RecordingWriter<W: Write> {
    out: W,
    last: Option<i64>,
    bytes: u64,
    entries: u64,
}

impl RecordingWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> RecordingWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            last: None,
            bytes: 0,
            entries: 0,
        }
    }

    pub fn append(&mut self, timestamp: i64, container: &Container) -> Result<(), RecordingError> {
        self.append_frame(timestamp, &container.encode())
    }

    /// Appends an already encoded frame verbatim.
    pub fn append_frame(&mut self, timestamp: i64, frame: &[u8]) -> Result<(), RecordingError> {
        if let Some(previous) = self.last.filter(|&p| timestamp < p) {
            return Err(RecordingError::NonMonotonic {
                offset: self.bytes,
                previous,
                found: timestamp,
            });
        }
        self.out.write_all(&timestamp.to_le_bytes())?;
        self.out.write_all(frame)?;
        self.last = Some(timestamp);
        self.bytes += 8 + frame.len() as u64;
        self.entries += 1;
        Ok(())
    }

    pub fn entries(&self) -> u64 {
        self.entries
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streaming reader; iterate to get entries in file order.
pub struct RecordingReader<R: Read> {
    input: R,
    offset: u64,
    last: Option<i64>,
    failed: bool,
}

impl RecordingReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: Read> RecordingReader<R> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            offset: 0,
            last: None,
            failed: false,
        }
    }

    /// Reads exactly `buf.len()` bytes. `Ok(false)` on a clean end of
    /// input before the first byte.
    fn fill(&mut self, buf: &mut [u8], entry: u64) -> Result<bool, RecordingError> {
        let mut got = 0;
        while got < buf.len() {
            match self.input.read(&mut buf[got..]) {
                Ok(0) if got == 0 => return Ok(false),
                Ok(0) => return Err(RecordingError::Truncated { offset: entry }),
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(true)
    }

    fn next_entry(&mut self) -> Result<Option<Entry>, RecordingError> {
        let start = self.offset;
        let mut ts = [0u8; 8];
        if !self.fill(&mut ts, start)? {
            return Ok(None);
        }
        let timestamp = i64::from_le_bytes(ts);
        let mut frame = vec![0u8; FRAME_HEADER_LEN];
        if !self.fill(&mut frame, start)? {
            return Err(RecordingError::Truncated { offset: start });
        }
        let magic = u32::from_le_bytes(frame[0..4].try_into().unwrap());
        if magic != FRAME_MAGIC {
            return Err(RecordingError::Frame {
                offset: start,
                source: DecodeError::BadMagic { found: magic },
            });
        }
        let len = u32::from_le_bytes(frame[16..20].try_into().unwrap()) as usize;
        frame.resize(FRAME_HEADER_LEN + len, 0);
        if len > 0 && !self.fill(&mut frame[FRAME_HEADER_LEN..], start)? {
            return Err(RecordingError::Truncated { offset: start });
        }
        Container::decode(&frame).map_err(|source| RecordingError::Frame { offset: start, source })?;
        if let Some(previous) = self.last.filter(|&p| timestamp < p) {
            return Err(RecordingError::NonMonotonic {
                offset: start,
                previous,
                found: timestamp,
            });
        }
        self.last = Some(timestamp);
        self.offset += 8 + frame.len() as u64;
        Ok(Some(Entry { timestamp, frame }))
    }
}

impl<R: Read> Iterator for RecordingReader<R> {
    type Item = Result<Entry, RecordingError>;

    /// Stops after the first error.
    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.next_entry();
        if r.is_err() {
            self.failed = true;
        }
        r.transpose()
    }
}

/// Reads a whole recording file.
pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<Entry>, RecordingError> {
    RecordingReader::open(path)?.collect()
}

/// Parses an in-memory recording.
pub fn read_bytes(bytes: &[u8]) -> Result<Vec<Entry>, RecordingError> {
    RecordingReader::new(bytes).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_recording() {
        assert!(read_bytes(&[]).unwrap().is_empty());
    }

    #[test]
    fn entry_size_and_round_trip() {
        let c = Container::new(101, 5, vec![]);
        let mut w = RecordingWriter::new(Vec::new());
        w.append(10, &c).unwrap();
        let bytes = w.into_inner().unwrap();
        assert_eq!(bytes.len(), 8 + c.frame_len());
        let entries = read_bytes(&bytes).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].timestamp, 10);
        assert_eq!(entries[0].container().unwrap(), c);
    }

    #[test]
    fn rejects_decreasing_timestamps() {
        let c = Container::new(1, 0, vec![]);
        let mut w = RecordingWriter::new(Vec::new());
        w.append(10, &c).unwrap();
        w.append(10, &c).unwrap();
        assert!(matches!(w.append(9, &c), Err(RecordingError::NonMonotonic { .. })));
    }

    #[test]
    fn truncation_reports_entry_offset() {
        let c = Container::new(1, 0, vec![]);
        let mut w = RecordingWriter::new(Vec::new());
        w.append(1, &c).unwrap();
        w.append(2, &c).unwrap();
        let mut bytes = w.into_inner().unwrap();
        bytes.pop();
        let results: Vec<_> = RecordingReader::new(bytes.as_slice()).collect();
        assert_eq!(results.len(), 2);
        assert!(results[0].is_ok());
        match &results[1] {
            Err(RecordingError::Truncated { offset }) => assert_eq!(*offset, 28),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_reported() {
        let mut bytes = 0i64.to_le_bytes().to_vec();
        bytes.extend_from_slice(&[0u8; 20]);
        assert!(matches!(
            read_bytes(&bytes),
            Err(RecordingError::Frame {
                offset: 0,
                source: DecodeError::BadMagic { found: 0 }
            })
        ));
    }
}
