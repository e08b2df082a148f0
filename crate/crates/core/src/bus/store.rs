use std::collections::{BTreeMap, VecDeque};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::serialization::Container;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreKind {
    /// Arrival order; the oldest entry is dropped at capacity.
    Fifo,
    /// Newest first; the oldest entry is dropped at capacity.
    Lifo,
    /// Latest container per `dataTypeId`.
    KeyValue,
}

#[derive(Debug)]
enum Contents {
    Queue(VecDeque<Container>),
    Latest {
        entries: BTreeMap<u32, (u64, Container)>,
        next_seq: u64,
    },
}

/// Thread-safe receiving store. Producers push, consumers take; both sides
/// may live on different threads.
#[derive(Debug)]
pub struct DataStore {
    kind: StoreKind,
    capacity: Option<usize>,
    contents: Mutex<Contents>,
    available: Condvar,
}

impl DataStore {
    /// `capacity` of `None` means unbounded; `Some(0)` is treated as 1.
    pub fn new(kind: StoreKind, capacity: Option<usize>) -> Self {
        let contents = match kind {
            StoreKind::Fifo | StoreKind::Lifo => Contents::Queue(VecDeque::new()),
            StoreKind::KeyValue => Contents::Latest {
                entries: BTreeMap::new(),
                next_seq: 0,
            },
        };
        Self {
            kind,
            capacity: capacity.map(|c| c.max(1)),
            contents: Mutex::new(contents),
            available: Condvar::new(),
        }
    }

    pub fn fifo() -> Self {
        Self::new(StoreKind::Fifo, None)
    }

    pub fn lifo() -> Self {
        Self::new(StoreKind::Lifo, None)
    }

    pub fn key_value() -> Self {
        Self::new(StoreKind::KeyValue, None)
    }

    pub fn kind(&self) -> StoreKind {
        self.kind
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    fn lock(&self) -> MutexGuard<'_, Contents> {
        self.contents.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn push(&self, container: Container) {
        let mut contents = self.lock();
        match &mut *contents {
            Contents::Queue(q) => {
                if self.capacity.is_some_and(|cap| q.len() >= cap) {
                    q.pop_front();
                }
                q.push_back(container);
            }
            Contents::Latest { entries, next_seq } => {
                let id = container.data_type_id;
                if !entries.contains_key(&id) && self.capacity.is_some_and(|cap| entries.len() >= cap) {
                    let stalest = entries.iter().min_by_key(|(_, (seq, _))| *seq).map(|(k, _)| *k);
                    if let Some(k) = stalest {
                        entries.remove(&k);
                    }
                }
                entries.insert(id, (*next_seq, container));
                *next_seq += 1;
            }
        }
        drop(contents);
        self.available.notify_one();
    }

    fn take_locked(&self, contents: &mut Contents) -> Option<Container> {
        match contents {
            Contents::Queue(q) => match self.kind {
                StoreKind::Lifo => q.pop_back(),
                _ => q.pop_front(),
            },
            Contents::Latest { entries, .. } => {
                let stalest = entries.iter().min_by_key(|(_, (seq, _))| *seq).map(|(k, _)| *k)?;
                entries.remove(&stalest).map(|(_, c)| c)
            }
        }
    }

    /// Removes the next container: oldest for FIFO, newest for LIFO, least
    /// recently updated entry for key/value.
    pub fn take(&self) -> Option<Container> {
        let mut contents = self.lock();
        self.take_locked(&mut contents)
    }

    /// Blocks up to `timeout` for a container.
    pub fn wait_take(&self, timeout: Duration) -> Option<Container> {
        let deadline = Instant::now() + timeout;
        let mut contents = self.lock();
        loop {
            if let Some(c) = self.take_locked(&mut contents) {
                return Some(c);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            contents = self
                .available
                .wait_timeout(contents, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// Removes everything, in [`take`](Self::take) order.
    pub fn drain(&self) -> Vec<Container> {
        let mut contents = self.lock();
        let mut out = Vec::new();
        while let Some(c) = self.take_locked(&mut contents) {
            out.push(c);
        }
        out
    }

    /// Latest container of a type (key/value stores only).
    pub fn get(&self, data_type_id: u32) -> Option<Container> {
        match &*self.lock() {
            Contents::Latest { entries, .. } => entries.get(&data_type_id).map(|(_, c)| c.clone()),
            Contents::Queue(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match &*self.lock() {
            Contents::Queue(q) => q.len(),
            Contents::Latest { entries, .. } => entries.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        match &mut *self.lock() {
            Contents::Queue(q) => q.clear(),
            Contents::Latest { entries, .. } => entries.clear(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(id: u32, seq: i64) -> Container {
        Container::new(id, seq, Vec::new())
    }

    #[test]
    fn fifo_order_and_capacity() {
        let s = DataStore::new(StoreKind::Fifo, Some(2));
        for i in 0..3 {
            s.push(c(1, i));
        }
        assert_eq!(s.take().unwrap().sent_timestamp, 1);
        assert_eq!(s.take().unwrap().sent_timestamp, 2);
        assert!(s.take().is_none());
    }

    #[test]
    fn lifo_newest_first() {
        let s = DataStore::lifo();
        for i in 0..3 {
            s.push(c(1, i));
        }
        assert_eq!(s.take().unwrap().sent_timestamp, 2);
    }

    #[test]
    fn key_value_keeps_latest_per_type() {
        let s = DataStore::key_value();
        s.push(c(42, 0));
        s.push(c(42, 1));
        s.push(c(7, 2));
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(42).unwrap().sent_timestamp, 1);
        assert_eq!(s.get(7).unwrap().sent_timestamp, 2);
    }

    #[test]
    fn wait_take_times_out() {
        let s = DataStore::fifo();
        assert!(s.wait_take(Duration::from_millis(10)).is_none());
    }
}
