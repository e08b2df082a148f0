//! Deterministic run loop.
//!
//! The simulation owns the clock and an in-process conference. Time
//! advances in fixed slices; within a slice the order is always:
//!
//! 1. deliver everything sent during the previous slice,
//! 2. step CONTEXT parts in registration order,
//! 3. step SUT parts in registration order,
//! 4. notify OBSERVER parts.
//!
//! Containers sent in the final slice are never delivered. Before the
//! first slice every active part obtains its configuration from an
//! embedded supercomponent through DMCP discovery on the same bus.
//!
//! Observers receive an [`ObserverHandle`], which cannot send:
//!
//! ```compile_fail
//! fn leak(bus: &vtd::bus::ObserverHandle, c: vtd::serialization::Container) {
//!     bus.send(c);
//! }
//! ```

mod autopilot;
mod observers;
mod world;

pub use autopilot::{Autopilot, AUTOPILOT_MODULE};
pub use observers::{Recorder, SharedBuffer, TraceDump, ValidatorHost};
pub use world::{run_multi_vehicle, RunSetup, ScannerRig, ScriptedTraffic, SutFactory, VehicleModel, World};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bus::{BusHandle, DataStore, Filter, InProcessConference, ObserverHandle};
use crate::dmcp::{ConfigError, ConfigurationSet, DmcpClient, ModuleDescriptor, Supercomponent};
use crate::messages::type_id;
use crate::validators::Verdict;

pub const DEFAULT_STEP_US: i64 = 10_000;

/// Failure inside a part callback.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct PartError(pub String);

impl PartError {
    pub fn new(msg: impl fmt::Display) -> Self {
        Self(msg.to_string())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("setup of part `{part}` failed: {message}")]
    Setup { part: String, message: String },
    #[error("no configuration reply for {0}")]
    Discovery(ModuleDescriptor),
}

/// What a part may use while setting up.
pub struct SetupContext<'a> {
    pub bus: &'a BusHandle,
    /// This part's configuration subset as delivered by DMCP.
    pub config: &'a ConfigurationSet,
    pub seed: u64,
    pub step_us: i64,
}

/// A part that may send: world context or system under test.
pub trait ActivePart {
    fn name(&self) -> String;

    /// Identity announced during discovery.
    fn descriptor(&self) -> ModuleDescriptor;

    fn setup(&mut self, ctx: &SetupContext<'_>) -> Result<(), PartError>;

    fn step(&mut self, now: i64, bus: &BusHandle) -> Result<(), PartError>;

    fn teardown(&mut self) {}
}

/// A receive-only part: recorders, validators, trace writers.
pub trait ObserverPart {
    fn name(&self) -> String;

    fn setup(&mut self, bus: &ObserverHandle) -> Result<(), PartError>;

    fn observe(&mut self, now: i64) -> Result<(), PartError>;

    /// Called once after the last slice or after an abort.
    fn finish(&mut self) -> Result<(), PartError> {
        Ok(())
    }

    /// Whether this observer hosts validators.
    fn validating(&self) -> bool {
        false
    }

    fn all_final(&self) -> bool {
        true
    }

    fn verdicts(&self) -> Vec<Verdict> {
        Vec::new()
    }
}

pub enum SystemPart {
    Context(Box<dyn ActivePart>),
    Sut(Box<dyn ActivePart>),
    Observer(Box<dyn ObserverPart>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clock {
    pub duration_us: i64,
    pub step_us: i64,
}

impl Clock {
    pub fn new(duration_us: i64, step_us: i64) -> Result<Self, SimError> {
        if step_us <= 0 {
            return Err(SimError::InvalidConfig(format!("step {step_us} us must be positive")));
        }
        if duration_us < 0 || duration_us % step_us != 0 {
            return Err(SimError::InvalidConfig(format!(
                "duration {duration_us} us is not a multiple of step {step_us} us"
            )));
        }
        Ok(Self { duration_us, step_us })
    }

    /// Reads `simulation.duration` (seconds) and `simulation.step`
    /// (microseconds, default 10000).
    pub fn from_config(cfg: &ConfigurationSet) -> Result<Self, SimError> {
        let seconds: f64 = cfg.require("simulation.duration")?;
        if !(seconds >= 0.0 && seconds.is_finite()) {
            return Err(SimError::InvalidConfig(format!("duration {seconds} s")));
        }
        let step = cfg.get_or("simulation.step", DEFAULT_STEP_US)?;
        Self::new((seconds * 1e6).round() as i64, step)
    }

    pub fn slices(&self) -> u64 {
        (self.duration_us / self.step_us) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abort {
    pub part: String,
    pub slice: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub verdicts: Vec<Verdict>,
    pub slices: u64,
    pub simtime_us: i64,
    pub abort: Option<Abort>,
}

impl RunReport {
    /// No abort and every verdict passed. A run without verdicts passes.
    pub fn passed(&self) -> bool {
        self.abort.is_none() && self.verdicts.iter().all(Verdict::passed)
    }

    pub fn failed_validators(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed())
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            writeln!(f, "{v}")?;
        }
        if let Some(a) = &self.abort {
            writeln!(f, "ERROR part={} slice={} {}", a.part, a.slice, a.message)?;
        }
        writeln!(
            f,
            "RUN {} slices={} simtime={}",
            if self.passed() { "PASSED" } else { "FAILED" },
            self.slices,
            self.simtime_us
        )
    }
}

struct Active {
    part: Box<dyn ActivePart>,
    bus: BusHandle,
}

pub struct Simulation {
    conference: InProcessConference,
    clock: Clock,
    seed: u64,
    supercomponent: Supercomponent,
    sc_bus: BusHandle,
    sc_inbox: Arc<DataStore>,
    context: Vec<Active>,
    suts: Vec<Active>,
    observers: Vec<Box<dyn ObserverPart>>,
}

impl Simulation {
    /// `master` is the configuration served to parts during discovery.
    pub fn new(clock: Clock, seed: u64, master: ConfigurationSet) -> Result<Self, SimError> {
        let conference = InProcessConference::new();
        let sc_bus = conference.sender("supercomponent");
        let sc_inbox = Arc::new(DataStore::fifo());
        sc_bus
            .add_listener(
                Filter::types([type_id::DISCOVER, type_id::PULSE]).expect("non-empty filter"),
                Arc::clone(&sc_inbox),
            )
            .expect("fresh store");
        Ok(Self {
            conference,
            clock,
            seed,
            supercomponent: Supercomponent::new(master)?,
            sc_bus,
            sc_inbox,
            context: Vec::new(),
            suts: Vec::new(),
            observers: Vec::new(),
        })
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn supercomponent(&self) -> &Supercomponent {
        &self.supercomponent
    }

    /// Registers a part. Active parts get their sender slot now, so
    /// registration order is delivery order.
    pub fn add(&mut self, part: SystemPart) {
        match part {
            SystemPart::Context(p) => {
                let bus = self.conference.sender(p.name());
                self.context.push(Active { part: p, bus });
            }
            SystemPart::Sut(p) => {
                let bus = self.conference.sender(p.name());
                self.suts.push(Active { part: p, bus });
            }
            SystemPart::Observer(p) => self.observers.push(p),
        }
    }

    fn serve_dmcp(&mut self, now: i64) {
        for c in self.sc_inbox.drain() {
            if let Some(reply) = self.supercomponent.handle(&c, now) {
                self.sc_bus.send(reply);
            }
        }
    }

    fn discover(&mut self, bus: &BusHandle, descriptor: ModuleDescriptor) -> Result<ConfigurationSet, SimError> {
        let client = DmcpClient::new(descriptor.clone());
        let inbox = Arc::new(DataStore::fifo());
        let handle = bus
            .add_listener(Filter::only(type_id::CONFIG_RESPONSE), Arc::clone(&inbox))
            .expect("fresh store");
        bus.send(client.discover_message(0));
        self.conference.deliver();
        self.serve_dmcp(0);
        self.conference.deliver();
        bus.remove_listener(handle);
        inbox
            .drain()
            .iter()
            .find_map(|c| client.accept(c))
            .ok_or(SimError::Discovery(descriptor))
    }

    fn setup_active(&mut self, parts: &mut [Active]) -> Result<(), SimError> {
        for a in parts {
            let config = self.discover(&a.bus, a.part.descriptor())?;
            let ctx = SetupContext {
                bus: &a.bus,
                config: &config,
                seed: self.seed,
                step_us: self.clock.step_us,
            };
            a.part.setup(&ctx).map_err(|e| SimError::Setup {
                part: a.part.name(),
                message: e.0,
            })?;
        }
        Ok(())
    }

    /// Observers first, then discovery and setup of context and SUT
    /// parts in registration order.
    fn setup(&mut self) -> Result<(), SimError> {
        let observer = self.conference.observer();
        for o in &mut self.observers {
            o.setup(&observer).map_err(|e| SimError::Setup {
                part: o.name(),
                message: e.0,
            })?;
        }
        let mut context = std::mem::take(&mut self.context);
        let mut suts = std::mem::take(&mut self.suts);
        let result = self
            .setup_active(&mut context)
            .and_then(|_| self.setup_active(&mut suts));
        self.context = context;
        self.suts = suts;
        result
    }

    fn step_slice(&mut self, slice: u64, now: i64) -> Result<(), Abort> {
        self.conference.deliver();
        self.serve_dmcp(now);
        self.supercomponent.check(now);
        let abort = |name: String, e: PartError| Abort {
            part: name,
            slice,
            message: e.0,
        };
        for a in self.context.iter_mut().chain(self.suts.iter_mut()) {
            a.part.step(now, &a.bus).map_err(|e| abort(a.part.name(), e))?;
        }
        for o in &mut self.observers {
            o.observe(now).map_err(|e| abort(o.name(), e))?;
        }
        Ok(())
    }

    fn validators_settled(&self) -> bool {
        let mut hosts = self.observers.iter().filter(|o| o.validating()).peekable();
        hosts.peek().is_some() && hosts.all(|o| o.all_final())
    }

    /// Sets up all parts and runs to the configured duration, or until
    /// every validator has a final verdict. Setup failures are errors; a
    /// failing callback during the run aborts it with a FAILED report.
    pub fn run(mut self) -> Result<RunReport, SimError> {
        self.setup()?;
        let total = self.clock.slices();
        let mut slices = 0;
        let mut abort = None;
        for k in 0..total {
            let now = k as i64 * self.clock.step_us;
            slices = k + 1;
            if let Err(a) = self.step_slice(k, now) {
                abort = Some(a);
                break;
            }
            if self.validators_settled() {
                break;
            }
        }
        for a in self.context.iter_mut().chain(self.suts.iter_mut()) {
            a.part.teardown();
        }
        let mut verdicts = Vec::new();
        for o in &mut self.observers {
            if let Err(e) = o.finish() {
                abort.get_or_insert(Abort {
                    part: o.name(),
                    slice: slices.saturating_sub(1),
                    message: e.0,
                });
            }
            verdicts.extend(o.verdicts());
        }
        Ok(RunReport {
            verdicts,
            slices,
            simtime_us: slices as i64 * self.clock.step_us,
            abort,
        })
    }
}
