use std::sync::{Arc, Mutex, MutexGuard};

use super::{BusError, Conference, DataStore, Filter, ListenerHandle, ListenerSet};
use crate::serialization::Container;

#[derive(Default)]
struct Shared {
    listeners: ListenerSet,
    senders: Vec<String>,
    /// Pending sends, one queue per registered sender.
    pending: Vec<Vec<Container>>,
    delivered: u64,
}

/// Deterministic in-process conference. Sends are queued per sender and
/// reach listeners only when [`deliver`](Self::deliver) is called.
#[derive(Clone, Default)]
pub struct InProcessConference {
    shared: Arc<Mutex<Shared>>,
}

fn lock(shared: &Mutex<Shared>) -> MutexGuard<'_, Shared> {
    shared.lock().unwrap_or_else(|e| e.into_inner())
}

impl InProcessConference {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a sender. Registration order fixes delivery order.
    pub fn sender(&self, name: impl Into<String>) -> BusHandle {
        let mut s = lock(&self.shared);
        s.senders.push(name.into());
        s.pending.push(Vec::new());
        BusHandle {
            shared: Arc::clone(&self.shared),
            index: s.senders.len() - 1,
        }
    }

    /// A receive-only handle.
    pub fn observer(&self) -> ObserverHandle {
        ObserverHandle {
            shared: Arc::clone(&self.shared),
        }
    }

    pub fn add_listener(&self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError> {
        lock(&self.shared).listeners.add(filter, store)
    }

    /// Delivery point: hands every pending container to the listeners,
    /// sender by sender in registration order. Returns the number of
    /// containers delivered.
    pub fn deliver(&self) -> usize {
        let mut s = lock(&self.shared);
        let batches: Vec<Vec<Container>> = s.pending.iter_mut().map(std::mem::take).collect();
        let mut n = 0;
        for batch in &batches {
            for c in batch {
                s.listeners.dispatch(c);
                n += 1;
            }
        }
        s.delivered += n as u64;
        n
    }

    pub fn pending(&self) -> usize {
        lock(&self.shared).pending.iter().map(Vec::len).sum()
    }

    pub fn delivered_total(&self) -> u64 {
        lock(&self.shared).delivered
    }

    pub fn sender_names(&self) -> Vec<String> {
        lock(&self.shared).senders.clone()
    }
}

/// Sending handle bound to one registered sender.
#[derive(Clone)]
pub struct BusHandle {
    shared: Arc<Mutex<Shared>>,
    index: usize,
}

impl BusHandle {
    pub fn sender_index(&self) -> usize {
        self.index
    }

    pub fn send(&self, container: Container) {
        lock(&self.shared).pending[self.index].push(container);
    }

    pub fn add_listener(&self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError> {
        lock(&self.shared).listeners.add(filter, store)
    }

    pub fn remove_listener(&self, handle: ListenerHandle) -> bool {
        lock(&self.shared).listeners.remove(handle)
    }
}

impl Conference for BusHandle {
    fn send(&self, container: &Container) -> Result<(), BusError> {
        BusHandle::send(self, container.clone());
        Ok(())
    }

    fn add_listener(&self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError> {
        BusHandle::add_listener(self, filter, store)
    }

    fn remove_listener(&self, handle: ListenerHandle) -> bool {
        BusHandle::remove_listener(self, handle)
    }
}

/// Listen-only handle; it has no way to send.
#[derive(Clone)]
pub struct ObserverHandle {
    shared: Arc<Mutex<Shared>>,
}

impl ObserverHandle {
    pub fn add_listener(&self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError> {
        lock(&self.shared).listeners.add(filter, store)
    }

    pub fn remove_listener(&self, handle: ListenerHandle) -> bool {
        lock(&self.shared).listeners.remove(handle)
    }
}
