use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use super::{ConfigError, ConfigResponse, ConfigurationSet, Discover, LifecycleState, ModuleDescriptor, Pulse};
use crate::bus::{BusError, Conference, DataStore, Filter};
use crate::messages::{type_id, Message};
use crate::serialization::Container;

const DEFAULT_PULSE_INTERVAL_US: i64 = 1_000_000;
const DEFAULT_TIMEOUT_PULSES: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Supervised {
    pub descriptor: ModuleDescriptor,
    pub state: LifecycleState,
    pub last_seen_us: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseOutcome {
    Accepted(LifecycleState),
    UnknownDescriptor,
    IllegalTransition { from: LifecycleState, to: LifecycleState },
}

/// Owner of the master configuration and the lifecycle table. Event-driven
/// and transport-agnostic: feed it containers and supervision ticks.
#[derive(Debug, Clone)]
pub struct Supercomponent {
    master: ConfigurationSet,
    pulse_interval_us: i64,
    timeout_pulses: u32,
    table: BTreeMap<(String, u32), Supervised>,
    terminated: BTreeSet<(String, u32)>,
}

impl Supercomponent {
    /// Reads `global.dmcp.pulseinterval` (seconds) and
    /// `global.dmcp.timeoutpulses` from the master configuration.
    pub fn new(master: ConfigurationSet) -> Result<Self, ConfigError> {
        let interval_s: Option<f64> = master.get_parsed("global.dmcp.pulseinterval")?;
        let pulse_interval_us = match interval_s {
            Some(s) if s > 0.0 && s.is_finite() => (s * 1e6).round() as i64,
            Some(_) => {
                return Err(ConfigError::InvalidValue {
                    key: "global.dmcp.pulseinterval".into(),
                    value: master.get("global.dmcp.pulseinterval").unwrap_or("").into(),
                })
            }
            None => DEFAULT_PULSE_INTERVAL_US,
        };
        let timeout_pulses = master.get_or("global.dmcp.timeoutpulses", DEFAULT_TIMEOUT_PULSES)?;
        Ok(Self {
            master,
            pulse_interval_us,
            timeout_pulses: timeout_pulses.max(1),
            table: BTreeMap::new(),
            terminated: BTreeSet::new(),
        })
    }

    pub fn master(&self) -> &ConfigurationSet {
        &self.master
    }

    pub fn pulse_interval_us(&self) -> i64 {
        self.pulse_interval_us
    }

    /// Registers the component and returns its configuration. The
    /// component is CONFIGURED once the reply has been produced.
    pub fn discover(&mut self, descriptor: &ModuleDescriptor, now_us: i64) -> ConfigurationSet {
        let config = self.master.filter_for(&descriptor.name, descriptor.instance_id);
        self.terminated.remove(&descriptor.key());
        self.table.insert(
            descriptor.key(),
            Supervised {
                descriptor: descriptor.clone(),
                state: LifecycleState::Configured,
                last_seen_us: now_us,
            },
        );
        config
    }

    pub fn pulse(&mut self, descriptor: &ModuleDescriptor, state: LifecycleState, timestamp_us: i64) -> PulseOutcome {
        let key = descriptor.key();
        let Some(entry) = self.table.get_mut(&key) else {
            log::warn!("pulse from unknown component {descriptor}, ignored");
            return PulseOutcome::UnknownDescriptor;
        };
        if !entry.state.can_become(state) {
            log::warn!("component {descriptor}: illegal transition {:?} -> {:?}, ignored", entry.state, state);
            return PulseOutcome::IllegalTransition { from: entry.state, to: state };
        }
        entry.last_seen_us = entry.last_seen_us.max(timestamp_us);
        if state == LifecycleState::Terminated {
            self.table.remove(&key);
            self.terminated.insert(key);
        } else {
            entry.state = state;
        }
        PulseOutcome::Accepted(state)
    }

    /// Supervision tick: marks RUNNING components that have been silent for
    /// `timeoutpulses` intervals as UNRESPONSIVE. Returns the transitions.
    pub fn check(&mut self, now_us: i64) -> Vec<ModuleDescriptor> {
        let limit = self.pulse_interval_us * self.timeout_pulses as i64;
        let mut changed = Vec::new();
        for entry in self.table.values_mut() {
            if entry.state == LifecycleState::Running && now_us - entry.last_seen_us >= limit {
                entry.state = LifecycleState::Unresponsive;
                log::warn!("component {} unresponsive", entry.descriptor);
                changed.push(entry.descriptor.clone());
            }
        }
        changed
    }

    pub fn state(&self, name: &str, instance_id: u32) -> Option<LifecycleState> {
        let key = (name.to_string(), instance_id);
        if self.terminated.contains(&key) {
            return Some(LifecycleState::Terminated);
        }
        self.table.get(&key).map(|e| e.state)
    }

    /// Discovered, non-terminated components.
    pub fn supervised(&self) -> impl Iterator<Item = &Supervised> {
        self.table.values()
    }

    /// Handles one bus container; returns the reply to broadcast, if any.
    pub fn handle(&mut self, container: &Container, now_us: i64) -> Option<Container> {
        match container.data_type_id {
            type_id::DISCOVER => match Discover::from_container(container) {
                Ok(d) => {
                    let config = self.discover(&d.descriptor, now_us);
                    Some(
                        ConfigResponse {
                            descriptor: d.descriptor,
                            config,
                        }
                        .to_container(now_us),
                    )
                }
                Err(e) => {
                    log::warn!("malformed DISCOVER: {e}");
                    None
                }
            },
            type_id::PULSE => {
                match Pulse::from_container(container) {
                    Ok(p) => {
                        self.pulse(&p.descriptor, p.state, p.timestamp);
                    }
                    Err(e) => log::warn!("malformed PULSE: {e}"),
                }
                None
            }
            _ => None,
        }
    }
}

fn wall_clock_us() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as i64)
        .unwrap_or(0)
}

/// A supercomponent serving a live conference from a background thread.
pub struct SupercomponentService {
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<Supercomponent>>,
}

impl SupercomponentService {
    pub fn spawn<C>(conference: Arc<C>, supercomponent: Supercomponent) -> Result<Self, BusError>
    where
        C: Conference + Send + Sync + 'static,
    {
        let store = Arc::new(DataStore::fifo());
        conference.add_listener(Filter::types([type_id::DISCOVER, type_id::PULSE])?, store.clone())?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&shutdown);
        let thread = std::thread::Builder::new()
            .name("supercomponent".into())
            .spawn(move || {
                let mut sc = supercomponent;
                while !flag.load(Ordering::Relaxed) {
                    if let Some(c) = store.wait_take(Duration::from_millis(50)) {
                        if let Some(reply) = sc.handle(&c, wall_clock_us()) {
                            if let Err(e) = conference.send(&reply) {
                                log::error!("supercomponent reply failed: {e}");
                            }
                        }
                    }
                    sc.check(wall_clock_us());
                }
                sc
            })
            .map_err(BusError::Transport)?;
        Ok(Self {
            shutdown,
            thread: Some(thread),
        })
    }

    /// Stops the service and returns its final state.
    pub fn stop(mut self) -> Option<Supercomponent> {
        self.shutdown.store(true, Ordering::Relaxed);
        self.thread.take().and_then(|t| t.join().ok())
    }
}

impl Drop for SupercomponentService {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: i64 = 1_000_000;

    fn running(sc: &mut Supercomponent, d: &ModuleDescriptor) {
        sc.discover(d, 0);
        assert_eq!(sc.pulse(d, LifecycleState::Running, 0), PulseOutcome::Accepted(LifecycleState::Running));
    }

    #[test]
    fn three_missed_pulses_make_unresponsive() {
        let mut sc = Supercomponent::new(ConfigurationSet::new()).unwrap();
        let d = ModuleDescriptor::new("planner", 0, "1");
        running(&mut sc, &d);
        sc.pulse(&d, LifecycleState::Running, S);
        sc.pulse(&d, LifecycleState::Running, 2 * S);
        assert!(sc.check(4_900_000).is_empty());
        assert_eq!(sc.state("planner", 0), Some(LifecycleState::Running));
        assert_eq!(sc.check(5 * S), vec![d.clone()]);
        assert_eq!(sc.state("planner", 0), Some(LifecycleState::Unresponsive));
        // one check, one transition
        assert!(sc.check(5_100_000).is_empty());
    }

    #[test]
    fn resumed_pulses_recover() {
        let mut sc = Supercomponent::new(ConfigurationSet::new()).unwrap();
        let d = ModuleDescriptor::new("planner", 0, "1");
        running(&mut sc, &d);
        sc.check(10 * S);
        assert_eq!(sc.state("planner", 0), Some(LifecycleState::Unresponsive));
        sc.pulse(&d, LifecycleState::Running, 11 * S);
        assert_eq!(sc.state("planner", 0), Some(LifecycleState::Running));
    }

    #[test]
    fn terminated_is_final() {
        let mut sc = Supercomponent::new(ConfigurationSet::new()).unwrap();
        let d = ModuleDescriptor::new("planner", 0, "1");
        running(&mut sc, &d);
        sc.pulse(&d, LifecycleState::Terminated, S);
        assert!(sc.check(100 * S).is_empty());
        assert_eq!(sc.state("planner", 0), Some(LifecycleState::Terminated));
        assert_eq!(sc.supervised().count(), 0);
    }

    #[test]
    fn unknown_pulse_ignored() {
        let mut sc = Supercomponent::new(ConfigurationSet::new()).unwrap();
        let d = ModuleDescriptor::new("ghost", 0, "1");
        assert_eq!(sc.pulse(&d, LifecycleState::Running, 0), PulseOutcome::UnknownDescriptor);
        assert_eq!(sc.supervised().count(), 0);
    }

    #[test]
    fn configurable_interval() {
        let cfg = ConfigurationSet::parse("global.dmcp.pulseinterval=0.5\nglobal.dmcp.timeoutpulses=2").unwrap();
        let mut sc = Supercomponent::new(cfg).unwrap();
        let d = ModuleDescriptor::new("m", 0, "");
        running(&mut sc, &d);
        assert!(sc.check(999_999).is_empty());
        assert_eq!(sc.check(S).len(), 1);
    }

    #[test]
    fn discover_over_containers() {
        let cfg = ConfigurationSet::parse("global.freq=100\nplanner.speedlimit=12.5\nperception.range=40").unwrap();
        let mut sc = Supercomponent::new(cfg).unwrap();
        let client = super::super::DmcpClient::new(ModuleDescriptor::new("planner", 0, "1"));
        let reply = sc.handle(&client.discover_message(0), 0).unwrap();
        let got = client.accept(&reply).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(sc.state("planner", 0), Some(LifecycleState::Configured));
    }
}
