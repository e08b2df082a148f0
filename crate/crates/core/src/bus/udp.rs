use std::io;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use socket2::{Domain, Protocol, Socket, Type};

use super::{BusError, Conference, ConferenceId, DataStore, Filter, ListenerHandle, ListenerSet, MAX_DATAGRAM};
use crate::serialization::Container;

#[derive(Debug, Clone, Copy, Default)]
pub struct UdpOptions {
    /// Bind the multicast membership and outgoing interface to 127.0.0.1.
    pub loopback: bool,
}

/// Live conference over UDP multicast. One background thread receives
/// datagrams, decodes them and pushes them into matching stores.
pub struct UdpConference {
    id: ConferenceId,
    socket: UdpSocket,
    listeners: Arc<Mutex<ListenerSet>>,
    sent: AtomicU64,
    received: Arc<AtomicU64>,
    shutdown: Arc<AtomicBool>,
    receiver: Option<JoinHandle<()>>,
}

impl UdpConference {
    pub fn join(id: ConferenceId, options: UdpOptions) -> Result<Self, BusError> {
        let iface = if options.loopback {
            Ipv4Addr::LOCALHOST
        } else {
            Ipv4Addr::UNSPECIFIED
        };

        let rx = Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::UDP))?;
        rx.set_reuse_address(true)?;
        #[cfg(unix)]
        rx.set_reuse_port(true)?;
        // Binding to the group address keeps other groups on the same port out.
        #[cfg(unix)]
        let bind_addr = id.socket_addr();
        #[cfg(not(unix))]
        let bind_addr = SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, id.socket_addr().port());
        rx.bind(&SocketAddr::V4(bind_addr).into())?;
        rx.join_multicast_v4(&id.multicast_group(), &iface)?;
        rx.set_read_timeout(Some(Duration::from_millis(50)))?;
        let rx: UdpSocket = rx.into();

        let tx = Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::UDP))?;
        tx.bind(&SocketAddr::V4(SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, 0)).into())?;
        tx.set_multicast_loop_v4(true)?;
        tx.set_multicast_ttl_v4(1)?;
        if options.loopback {
            tx.set_multicast_if_v4(&iface)?;
        }
        let socket: UdpSocket = tx.into();

        let listeners = Arc::new(Mutex::new(ListenerSet::default()));
        let received = Arc::new(AtomicU64::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let receiver = {
            let listeners = Arc::clone(&listeners);
            let received = Arc::clone(&received);
            let shutdown = Arc::clone(&shutdown);
            std::thread::Builder::new()
                .name(format!("conference-{}", id.group()))
                .spawn(move || receive_loop(rx, listeners, received, shutdown))?
        };

        Ok(Self {
            id,
            socket,
            listeners,
            sent: AtomicU64::new(0),
            received,
            shutdown,
            receiver: Some(receiver),
        })
    }

    pub fn id(&self) -> ConferenceId {
        self.id
    }

    /// Sends an already encoded frame verbatim as one datagram.
    pub fn send_frame(&self, frame: &[u8]) -> Result<(), BusError> {
        if frame.len() > MAX_DATAGRAM {
            return Err(BusError::Oversized { len: frame.len() });
        }
        self.socket.send_to(frame, self.id.socket_addr())?;
        self.sent.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    pub fn datagrams_sent(&self) -> u64 {
        self.sent.load(Ordering::Relaxed)
    }

    pub fn datagrams_received(&self) -> u64 {
        self.received.load(Ordering::Relaxed)
    }
}

fn receive_loop(
    socket: UdpSocket,
    listeners: Arc<Mutex<ListenerSet>>,
    received: Arc<AtomicU64>,
    shutdown: Arc<AtomicBool>,
) {
    let mut buf = vec![0u8; 65536];
    while !shutdown.load(Ordering::Relaxed) {
        let len = match socket.recv_from(&mut buf) {
            Ok((len, _)) => len,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => {
                log::error!("conference receive failed: {e}");
                break;
            }
        };
        received.fetch_add(1, Ordering::Relaxed);
        match Container::decode(&buf[..len]) {
            Ok(container) => listeners
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .dispatch(&container),
            Err(e) => log::warn!("dropping malformed datagram of {len} bytes: {e}"),
        }
    }
}

impl Conference for UdpConference {
    fn send(&self, container: &Container) -> Result<(), BusError> {
        self.send_frame(&container.encode())
    }

    fn add_listener(&self, filter: Filter, store: Arc<DataStore>) -> Result<ListenerHandle, BusError> {
        self.listeners
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .add(filter, store)
    }

    fn remove_listener(&self, handle: ListenerHandle) -> bool {
        self.listeners
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(handle)
    }
}

impl Drop for UdpConference {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(handle) = self.receiver.take() {
            let _ = handle.join();
        }
    }
}
