//! Dynamic module configuration and lifecycle supervision.
//!
//! A component announces itself with a DISCOVER container; the conference's
//! supercomponent answers with the configuration subset for that module
//! (see [`ConfigurationSet::filter_for`]). Running components then send
//! periodic pulses; a component that misses `timeoutpulses` consecutive
//! pulses is marked unresponsive until it pulses again.

mod config;
mod supercomponent;

pub use config::{is_valid_key, ConfigError, ConfigurationSet};
pub use supercomponent::{PulseOutcome, Supercomponent, SupercomponentService, Supervised};

use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::bus::{BusError, Conference, DataStore, Filter};
use crate::messages::{type_id, Message};
use crate::serialization::{DecodeError, PayloadReader, PayloadWriter};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModuleDescriptor {
    pub name: String,
    pub instance_id: u32,
    pub version: String,
}

impl ModuleDescriptor {
    pub fn new(name: impl Into<String>, instance_id: u32, version: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            instance_id,
            version: version.into(),
        }
    }

    pub fn key(&self) -> (String, u32) {
        (self.name.clone(), self.instance_id)
    }

    fn write(&self, w: &mut PayloadWriter) {
        w.put_str("name", &self.name)
            .put("instanceId", &self.instance_id)
            .put_str("version", &self.version);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            name: r.require("name")?,
            instance_id: r.get_or("instanceId", 0)?,
            version: r.get_or("version", String::new())?,
        })
    }
}

impl fmt::Display for ModuleDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.instance_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LifecycleState {
    Discovered,
    Configured,
    Running,
    Unresponsive,
    Terminated,
}

impl LifecycleState {
    pub fn code(self) -> u32 {
        match self {
            LifecycleState::Discovered => 0,
            LifecycleState::Configured => 1,
            LifecycleState::Running => 2,
            LifecycleState::Unresponsive => 3,
            LifecycleState::Terminated => 4,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => LifecycleState::Discovered,
            1 => LifecycleState::Configured,
            2 => LifecycleState::Running,
            3 => LifecycleState::Unresponsive,
            4 => LifecycleState::Terminated,
            _ => return None,
        })
    }

    /// Allowed lifecycle edges.
    pub fn can_become(self, next: LifecycleState) -> bool {
        use LifecycleState::*;
        matches!(
            (self, next),
            (Discovered, Configured)
                | (Configured, Running)
                | (Running, Running)
                | (Running, Unresponsive)
                | (Running, Terminated)
                | (Unresponsive, Running)
                | (Unresponsive, Terminated)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discover {
    pub descriptor: ModuleDescriptor,
}

impl Message for Discover {
    const TYPE_ID: u32 = type_id::DISCOVER;

    fn write(&self, w: &mut PayloadWriter) {
        self.descriptor.write(w);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            descriptor: ModuleDescriptor::read(r)?,
        })
    }
}

/// Broadcast reply, tagged with the requester's descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigResponse {
    pub descriptor: ModuleDescriptor,
    pub config: ConfigurationSet,
}

impl Message for ConfigResponse {
    const TYPE_ID: u32 = type_id::CONFIG_RESPONSE;

    fn write(&self, w: &mut PayloadWriter) {
        let mut d = PayloadWriter::new();
        self.descriptor.write(&mut d);
        w.put_record("descriptor", d);
        w.put_record_list(
            "entries",
            self.config.iter().map(|(k, v)| {
                let mut e = PayloadWriter::new();
                e.put_str("key", k).put_str("value", v);
                e
            }),
        );
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        let bad = |reason: String| DecodeError::BadField {
            field: "descriptor".into(),
            offset: 0,
            reason,
        };
        let descriptor = ModuleDescriptor::read(&r.record("descriptor")?.ok_or_else(|| bad("missing".into()))?)?;
        let mut config = ConfigurationSet::new();
        for entry in r.record_list("entries")?.unwrap_or_default() {
            let key: String = entry.require("key")?;
            let value: String = entry.get_or("value", String::new())?;
            config.insert(key, value).map_err(|e| DecodeError::BadField {
                field: "entries".into(),
                offset: 0,
                reason: e.to_string(),
            })?;
        }
        Ok(Self { descriptor, config })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pulse {
    pub descriptor: ModuleDescriptor,
    pub state: LifecycleState,
    /// Simulation or wall-clock microseconds.
    pub timestamp: i64,
}

impl Message for Pulse {
    const TYPE_ID: u32 = type_id::PULSE;

    fn write(&self, w: &mut PayloadWriter) {
        self.descriptor.write(w);
        w.put("state", &self.state.code()).put("timestamp", &self.timestamp);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        let code: u32 = r.require("state")?;
        let state = LifecycleState::from_code(code).ok_or_else(|| DecodeError::BadField {
            field: "state".into(),
            offset: 0,
            reason: format!("unknown lifecycle code {code}"),
        })?;
        Ok(Self {
            descriptor: ModuleDescriptor::read(r)?,
            state,
            timestamp: r.require("timestamp")?,
        })
    }
}

#[derive(Debug, Error)]
pub enum DmcpError {
    #[error("no configuration for {descriptor} after {attempts} attempts")]
    DiscoveryTimeout { descriptor: String, attempts: u32 },
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy)]
pub struct DiscoverOptions {
    pub attempts: u32,
    pub timeout_per_attempt: Duration,
}

impl Default for DiscoverOptions {
    fn default() -> Self {
        Self {
            attempts: 3,
            timeout_per_attempt: Duration::from_secs(1),
        }
    }
}

/// Component side of the protocol.
#[derive(Debug, Clone)]
pub struct DmcpClient {
    descriptor: ModuleDescriptor,
}

impl DmcpClient {
    pub fn new(descriptor: ModuleDescriptor) -> Self {
        Self { descriptor }
    }

    pub fn descriptor(&self) -> &ModuleDescriptor {
        &self.descriptor
    }

    pub fn discover_message(&self, timestamp: i64) -> crate::serialization::Container {
        Discover {
            descriptor: self.descriptor.clone(),
        }
        .to_container(timestamp)
    }

    pub fn pulse_message(&self, state: LifecycleState, timestamp: i64) -> crate::serialization::Container {
        Pulse {
            descriptor: self.descriptor.clone(),
            state,
            timestamp,
        }
        .to_container(timestamp)
    }

    /// The configuration in `container` if it answers this client.
    pub fn accept(&self, container: &crate::serialization::Container) -> Option<ConfigurationSet> {
        let reply = ConfigResponse::from_container(container).ok()?;
        (reply.descriptor.name == self.descriptor.name && reply.descriptor.instance_id == self.descriptor.instance_id)
            .then_some(reply.config)
    }

    /// Blocking discovery over a live conference. The component must not
    /// start on error.
    pub fn discover<C: Conference + ?Sized>(
        &self,
        conference: &C,
        options: DiscoverOptions,
        now_us: impl Fn() -> i64,
    ) -> Result<ConfigurationSet, DmcpError> {
        let store = std::sync::Arc::new(DataStore::fifo());
        let handle = conference.add_listener(Filter::only(type_id::CONFIG_RESPONSE), store.clone())?;
        let result = (|| {
            for _ in 0..options.attempts {
                conference.send(&self.discover_message(now_us()))?;
                let deadline = std::time::Instant::now() + options.timeout_per_attempt;
                loop {
                    let left = deadline.saturating_duration_since(std::time::Instant::now());
                    if left.is_zero() {
                        break;
                    }
                    match store.wait_take(left) {
                        Some(c) => {
                            if let Some(config) = self.accept(&c) {
                                return Ok(config);
                            }
                        }
                        None => break,
                    }
                }
            }
            Err(DmcpError::DiscoveryTimeout {
                descriptor: self.descriptor.to_string(),
                attempts: options.attempts,
            })
        })();
        conference.remove_listener(handle);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_round_trip() {
        let d = ModuleDescriptor::new("planner", 2, "1.0.3");
        let cfg = ConfigurationSet::parse("global.freq=100\nplanner.v=7").unwrap();
        let reply = ConfigResponse {
            descriptor: d.clone(),
            config: cfg,
        };
        let c = reply.to_container(5);
        assert_eq!(c.data_type_id, 2);
        assert_eq!(ConfigResponse::from_container(&c).unwrap(), reply);

        let p = Pulse {
            descriptor: d.clone(),
            state: LifecycleState::Running,
            timestamp: 1_000_000,
        };
        assert_eq!(Pulse::from_container(&p.to_container(0)).unwrap(), p);
        let disc = Discover { descriptor: d };
        assert_eq!(Discover::from_container(&disc.to_container(0)).unwrap(), disc);
        assert!(matches!(
            Pulse::from_container(&disc.to_container(0)),
            Err(DecodeError::WrongType { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn client_ignores_replies_for_others() {
        let me = DmcpClient::new(ModuleDescriptor::new("planner", 1, ""));
        let other = ConfigResponse {
            descriptor: ModuleDescriptor::new("planner", 2, ""),
            config: ConfigurationSet::new(),
        };
        assert!(me.accept(&other.to_container(0)).is_none());
    }

    #[test]
    fn lifecycle_edges() {
        use LifecycleState::*;
        assert!(Discovered.can_become(Configured));
        assert!(!Discovered.can_become(Running));
        assert!(Unresponsive.can_become(Running));
        assert!(!Terminated.can_become(Running));
        assert!(!Configured.can_become(Unresponsive));
    }
}
