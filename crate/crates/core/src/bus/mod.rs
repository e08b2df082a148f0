//! Conference bus: untyped sessions carrying typed containers.
//!
//! Two transports share the same listener/data-store model:
//!
//! * [`UdpConference`] sends every container as exactly one UDP multicast
//!   datagram on `239.255.42.<group>:12175`. It has no ordering or delivery
//!   guarantee across senders.
//! * [`InProcessConference`] queues sends and hands them to listeners only at
//!   explicit delivery points, ordered by sender registration and then by send
//!   order. The simulation run loop drives it.
//!
//! Both deliver a sender's own containers to its local listeners.

mod inproc;
mod store;
mod udp;

pub use inproc::{BusHandle, InProcessConference, ObserverHandle};
pub use store::{DataStore, StoreKind};
pub use udp::{UdpConference, UdpOptions};

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::net::{Ipv4Addr, SocketAddrV4};
use std::sync::Arc;

use thiserror::Error;

use crate::serialization::Container;

/// Fixed UDP port shared by all conferences.
pub const CONFERENCE_PORT: u16 = 12175;
/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65507;

#[derive(Debug, Error)]
pub enum BusError {
    #[error("conference group {0} outside 1..=254")]
    InvalidConference(u32),
    #[error("listener filter must be ALL or a non-empty type set")]
    EmptyFilter,
    #[error("store is already registered on this conference")]
    DuplicateListener,
    #[error("frame of {len} bytes exceeds the {MAX_DATAGRAM}-byte datagram limit")]
    Oversized { len: usize },
    #[error("transport failure: {0}")]
    Transport(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConferenceId(u8);

impl ConferenceId {
    pub fn new(group: u32) -> Result<Self, BusError> {
        match group {
            1..=254 => Ok(Self(group as u8)),
            _ => Err(BusError::InvalidConference(group)),
        }
    }

    pub fn group(self) -> u8 {
        self.0
    }

    pub fn multicast_group(self) -> Ipv4Addr {
        Ipv4Addr::new(239, 255, 42, self.0)
    }

    pub fn socket_addr(self) -> SocketAddrV4 {
        SocketAddrV4::new(self.multicast_group(), CONFERENCE_PORT)
    }
}

impl fmt::Display for ConferenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.socket_addr())
    }
}

/// Which containers a listener wants, by `dataTypeId`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    All,
    Types(BTreeSet<u32>),
}

impl Filter {
    pub fn types<I: IntoIterator<Item = u32>>(ids: I) -> Result<Self, BusError> {
        let set: BTreeSet<u32> = ids.into_iter().collect();
        if set.is_empty() {
            Err(BusError::EmptyFilter)
        } else {
            Ok(Filter::Types(set))
        }
    }

    pub fn only(id: u32) -> Self {
        Filter::Types(BTreeSet::from([id]))
    }

    pub fn matches(&self, data_type_id: u32) -> bool {
        match self {
            Filter::All => true,
            Filter::Types(set) => set.contains(&data_type_id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ListenerHandle(u64);

/// Common surface of both transports.
pub trait Conference {
    fn send(&self, container: &Container) -> Result<(), BusError>;
    fn add_listener(&self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError>;
    fn remove_listener(&self, handle: ListenerHandle) -> bool;
}

/// Registration-ordered listener table.
#[derive(Default)]
pub(crate) struct ListenerSet {
    next: u64,
    entries: Vec<(ListenerHandle, Filter, Arc<DataStore>)>,
}

impl ListenerSet {
    pub(crate) fn add(&mut self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError> {
        if let Filter::Types(set) = &filter {
            if set.is_empty() {
                return Err(BusError::EmptyFilter);
            }
        }
        if self.entries.iter().any(|(_, _, s)| Arc::ptr_eq(s, &store)) {
            return Err(BusError::DuplicateListener);
        }
        let handle = ListenerHandle(self.next);
        self.next += 1;
        self.entries.push((handle, filter, store));
        Ok(handle)
    }

    pub(crate) fn remove(&mut self, handle: ListenerHandle) -> bool {
        let before = self.entries.len();
        self.entries.retain(|(h, _, _)| *h != handle);
        self.entries.len() != before
    }

    pub(crate) fn dispatch(&self, container: &Container) {
        for (_, filter, store) in &self.entries {
            if filter.matches(container.data_type_id) {
                store.push(container.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conference_address_scheme() {
        let id = ConferenceId::new(7).unwrap();
        assert_eq!(id.socket_addr().to_string(), "239.255.42.7:12175");
        assert!(ConferenceId::new(0).is_err());
        assert!(ConferenceId::new(255).is_err());
        assert!(ConferenceId::new(254).is_ok());
    }

    #[test]
    fn empty_type_filter_rejected() {
        assert!(matches!(Filter::types([]), Err(BusError::EmptyFilter)));
        assert!(Filter::only(42).matches(42));
        assert!(!Filter::only(42).matches(7));
        assert!(Filter::All.matches(7));
    }
}
