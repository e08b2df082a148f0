use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ActivePart, Clock, ObserverPart, PartError, RunReport, SetupContext, SimError, Simulation, SystemPart};
use crate::bus::{BusHandle, DataStore, Filter};
use crate::dmcp::{ConfigurationSet, ModuleDescriptor};
use crate::geometry::{Pose, Vec2};
use crate::messages::{type_id, Message, RunInfo};
use crate::scenario::{
    extract_obstacles, validate_scenario, validate_situation, Behavior, Footprint, RouteGraph,
    Scenario, Shape, Situation, StopCondition,
};
use crate::sensor::{add_noise, mounts_from_config, scan, ScanResult, ScannerMount};
use crate::vehicle::{
    start_condition_met, step_kinematic, CommandMessage, PolylinePath, ScriptedDriver, StateReport, VehicleCommand,
    VehicleParams, VehicleState,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Validated scenario and situation plus the derived route graph.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Arc<Scenario>,
    pub situation: Arc<Situation>,
    pub graph: Arc<RouteGraph>,
}

impl World {
    pub fn new(scenario: Scenario, situation: Situation) -> Result<Self, SimError> {
        let mut errors: Vec<String> = validate_scenario(&scenario).iter().map(ToString::to_string).collect();
        errors.extend(validate_situation(&situation, Some(&scenario)).iter().map(ToString::to_string));
        if !errors.is_empty() {
            return Err(SimError::InvalidConfig(errors.join("; ")));
        }
        let graph = RouteGraph::from_scenario(&scenario);
        Ok(Self {
            scenario: Arc::new(scenario),
            situation: Arc::new(situation),
            graph: Arc::new(graph),
        })
    }

    /// Ids of externally driven objects, in situation order.
    pub fn sut_vehicles(&self) -> Vec<u32> {
        self.situation.external_objects().map(|o| o.id).collect()
    }

    /// Start pose of an externally driven object: its start waypoint,
    /// facing along the first outgoing edge.
    pub fn start_pose(&self, object: u32) -> Option<Pose> {
        let o = self.situation.object(object)?;
        let Behavior::ExternalDriver { start } = o.behavior else {
            return None;
        };
        let p = self.graph.position(start).ok()?;
        let heading = self
            .graph
            .edges_from(start)
            .first()
            .and_then(|&(next, _)| self.graph.position(next).ok())
            .map_or(0.0, |q| (q - p).angle());
        Some(Pose { position: p, heading })
    }

    fn dimensions(&self, object: u32) -> Option<(f64, f64, f64)> {
        self.situation.object(object).map(|o| match o.shape {
            Shape::Rectangle { length, width, height } => (length, width, height),
        })
    }
}

/// Latest pose and speed per vehicle from delivered state reports.
struct Tracker {
    store: Arc<DataStore>,
    latest: BTreeMap<u32, VehicleState>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            store: Arc::new(DataStore::fifo()),
            latest: BTreeMap::new(),
        }
    }

    fn attach(&self, bus: &BusHandle) -> Result<(), PartError> {
        bus.add_listener(Filter::only(type_id::VEHICLE_STATE), Arc::clone(&self.store))
            .map(|_| ())
            .map_err(PartError::new)
    }

    fn update(&mut self) -> Result<(), PartError> {
        for c in self.store.drain() {
            let r = StateReport::from_container(&c).map_err(PartError::new)?;
            self.latest.insert(r.vehicle_id, r.state);
        }
        Ok(())
    }
}

/// Moves every scripted object and writes the run-info marker.
pub struct ScriptedTraffic {
    world: World,
    info: RunInfo,
    drivers: Vec<(u32, ScriptedDriver)>,
    tracker: Tracker,
    dt: f64,
}

impl ScriptedTraffic {
    pub fn new(world: World, info: RunInfo) -> Self {
        Self {
            world,
            info,
            drivers: Vec::new(),
            tracker: Tracker::new(),
            dt: 0.0,
        }
    }

    fn build_driver(&self, id: u32) -> Result<Option<ScriptedDriver>, PartError> {
        let o = self.world.situation.object(id).expect("object listed by situation");
        let Behavior::PointIdDriver { ref route, speed } = o.behavior else {
            return Ok(None);
        };
        let points = self
            .world
            .graph
            .polyline(route)
            .map_err(|e| PartError::new(format!("object {id}: {e}")))?;
        let path = PolylinePath::new(&points).ok_or_else(|| PartError::new(format!("object {id}: empty route")))?;
        let stop_at = match o.stop {
            StopCondition::EndOfRoute => None,
            StopCondition::OnReachingPoint(wp) => {
                let i = route
                    .iter()
                    .position(|&w| w == wp)
                    .ok_or_else(|| PartError::new(format!("object {id}: stop point {wp} not on route")))?;
                // Arc length up to the first occurrence of the stop point.
                let upto = PolylinePath::new(&points[..=i]).expect("non-empty prefix");
                Some(upto.length())
            }
        };
        Ok(Some(ScriptedDriver::new(path, speed, o.start, stop_at)))
    }
}

impl ActivePart for ScriptedTraffic {
    fn name(&self) -> String {
        "traffic".into()
    }

    fn descriptor(&self) -> ModuleDescriptor {
        ModuleDescriptor::new("traffic", 0, VERSION)
    }

    fn setup(&mut self, ctx: &SetupContext<'_>) -> Result<(), PartError> {
        self.dt = ctx.step_us as f64 * 1e-6;
        let ids: Vec<u32> = self.world.situation.objects.iter().map(|o| o.id).collect();
        for id in ids {
            if let Some(d) = self.build_driver(id)? {
                self.drivers.push((id, d));
            }
        }
        self.tracker.attach(ctx.bus)?;
        ctx.bus.send(self.info.to_container(0));
        Ok(())
    }

    fn step(&mut self, now: i64, bus: &BusHandle) -> Result<(), PartError> {
        self.tracker.update()?;
        let latest = &self.tracker.latest;
        let scenario = &self.world.scenario;
        for (id, d) in &mut self.drivers {
            if !d.started() {
                let lookup = |o: u32| latest.get(&o).map(|s| (s.position, s.speed));
                let polygon = |p: u32| scenario.polygon(p).map(<[Vec2]>::to_vec);
                if start_condition_met(d.start_condition(), lookup, polygon) {
                    d.start();
                }
            }
            let pose = if now > 0 { d.step(self.dt) } else { d.pose() };
            let report = StateReport {
                vehicle_id: *id,
                state: VehicleState {
                    position: pose.position,
                    heading: pose.heading,
                    speed: if now > 0 { d.speed() } else { 0.0 },
                    steering: 0.0,
                    timestamp: now,
                },
            };
            bus.send(report.to_container(now));
        }
        Ok(())
    }
}

/// Kinematic bicycle model of one externally driven vehicle.
pub struct VehicleModel {
    vehicle_id: u32,
    state: VehicleState,
    params: VehicleParams,
    command: VehicleCommand,
    inbox: Arc<DataStore>,
    dt: f64,
}

impl VehicleModel {
    pub fn new(vehicle_id: u32, start: Pose) -> Self {
        Self {
            vehicle_id,
            state: VehicleState::at(start),
            params: VehicleParams::default(),
            command: VehicleCommand::default(),
            inbox: Arc::new(DataStore::fifo()),
            dt: 0.0,
        }
    }
}

impl ActivePart for VehicleModel {
    fn name(&self) -> String {
        format!("vehicle:{}", self.vehicle_id)
    }

    fn descriptor(&self) -> ModuleDescriptor {
        ModuleDescriptor::new("vehicle", self.vehicle_id, VERSION)
    }

    fn setup(&mut self, ctx: &SetupContext<'_>) -> Result<(), PartError> {
        self.params = VehicleParams::from_config(ctx.config).map_err(PartError::new)?;
        self.dt = ctx.step_us as f64 * 1e-6;
        ctx.bus
            .add_listener(Filter::only(type_id::VEHICLE_COMMAND), Arc::clone(&self.inbox))
            .map_err(PartError::new)?;
        Ok(())
    }

    fn step(&mut self, now: i64, bus: &BusHandle) -> Result<(), PartError> {
        for c in self.inbox.drain() {
            let m = CommandMessage::from_container(&c).map_err(PartError::new)?;
            if m.vehicle_id == self.vehicle_id {
                self.command = m.command;
            }
        }
        if now > 0 {
            self.state = step_kinematic(&self.state, &self.command, self.dt, &self.params).map_err(PartError::new)?;
        }
        self.state.timestamp = now;
        let report = StateReport {
            vehicle_id: self.vehicle_id,
            state: self.state,
        };
        bus.send(report.to_container(now));
        Ok(())
    }
}

/// Laser scanners mounted on every externally driven vehicle.
pub struct ScannerRig {
    world: World,
    carriers: Vec<u32>,
    mounts: Vec<(u32, ScannerMount)>,
    noise: f64,
    rng: ChaCha8Rng,
    tracker: Tracker,
}

/// Mixed into the run seed so that scanner noise does not share a stream
/// with other seeded parts.
const SCANNER_STREAM: u64 = 0x5ca7_7e12;

impl ScannerRig {
    pub fn new(world: World) -> Self {
        let carriers = world.sut_vehicles();
        Self {
            world,
            carriers,
            mounts: Vec::new(),
            noise: 0.0,
            rng: ChaCha8Rng::seed_from_u64(0),
            tracker: Tracker::new(),
        }
    }
}

impl ActivePart for ScannerRig {
    fn name(&self) -> String {
        "scanners".into()
    }

    fn descriptor(&self) -> ModuleDescriptor {
        ModuleDescriptor::new("scanner", 0, VERSION)
    }

    /// Reads `scanner.<n>.*` mounts and `scanner.noise` (range noise
    /// deviation in meters, default 0).
    fn setup(&mut self, ctx: &SetupContext<'_>) -> Result<(), PartError> {
        self.mounts = mounts_from_config(ctx.config).map_err(PartError::new)?;
        self.noise = ctx.config.get_or("scanner.noise", 0.0).map_err(PartError::new)?;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(PartError::new(format!("scanner.noise {} must be >= 0", self.noise)));
        }
        self.rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ SCANNER_STREAM);
        self.tracker.attach(ctx.bus)
    }

    fn step(&mut self, now: i64, bus: &BusHandle) -> Result<(), PartError> {
        self.tracker.update()?;
        if self.mounts.is_empty() {
            return Ok(());
        }
        for &carrier in &self.carriers {
            let Some(own) = self.tracker.latest.get(&carrier) else {
                continue;
            };
            let others: Vec<Footprint> = self
                .tracker
                .latest
                .iter()
                .filter(|(&id, _)| id != carrier)
                .filter_map(|(&id, s)| {
                    let (length, width, height) = self.world.dimensions(id)?;
                    Some(Footprint {
                        object_id: id,
                        pose: s.pose(),
                        length,
                        width,
                        height,
                    })
                })
                .collect();
            let obstacles = extract_obstacles(&self.world.scenario, &others);
            for (index, mount) in &self.mounts {
                let mut readings = scan(&obstacles, &own.pose(), mount);
                add_noise(&mut readings, self.noise, mount.max_range, &mut self.rng);
                let result = ScanResult {
                    vehicle_id: carrier,
                    scanner: *index,
                    timestamp: now,
                    readings,
                };
                bus.send(result.to_container(now));
            }
        }
        Ok(())
    }
}

/// Builds the SUT parts driving one vehicle.
pub type SutFactory = Box<dyn Fn(u32, &World) -> Vec<Box<dyn ActivePart>>>;

/// Everything needed to run a world besides the SUTs and observers.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub world: World,
    pub master: ConfigurationSet,
    pub clock: Clock,
    pub seed: u64,
}

impl RunSetup {
    /// Clock from `simulation.*`; the seed is `seed` if given, else
    /// `simulation.seed`, and one of them is required.
    pub fn new(world: World, master: ConfigurationSet, seed: Option<u64>) -> Result<Self, SimError> {
        let clock = Clock::from_config(&master)?;
        let seed = match seed {
            Some(s) => s,
            None => master
                .get_parsed("simulation.seed")?
                .ok_or_else(|| SimError::InvalidConfig("no seed: set simulation.seed or pass one".into()))?,
        };
        Ok(Self {
            world,
            master,
            clock,
            seed,
        })
    }

    pub fn run_info(&self) -> RunInfo {
        RunInfo {
            sut_vehicles: self.world.sut_vehicles(),
            seed: self.seed,
            step_us: self.clock.step_us,
            scenario: self.world.scenario.name.clone(),
        }
    }
}

/// Runs one world with one SUT per externally driven object. Factory `i`
/// drives the `i`-th such object. Context parts are traffic, then one
/// vehicle model per SUT vehicle, then the scanners.
pub fn run_multi_vehicle(
    setup: &RunSetup,
    factories: &[SutFactory],
    observers: Vec<Box<dyn ObserverPart>>,
) -> Result<RunReport, SimError> {
    let vehicles = setup.world.sut_vehicles();
    if vehicles.len() != factories.len() {
        return Err(SimError::InvalidConfig(format!(
            "{} externally driven objects but {} SUT factories",
            vehicles.len(),
            factories.len()
        )));
    }
    let mut sim = Simulation::new(setup.clock, setup.seed, setup.master.clone())?;
    for o in observers {
        sim.add(SystemPart::Observer(o));
    }
    sim.add(SystemPart::Context(Box::new(ScriptedTraffic::new(
        setup.world.clone(),
        setup.run_info(),
    ))));
    for &id in &vehicles {
        let start = setup
            .world
            .start_pose(id)
            .ok_or_else(|| SimError::InvalidConfig(format!("object {id} has no start pose")))?;
        sim.add(SystemPart::Context(Box::new(VehicleModel::new(id, start))));
    }
    sim.add(SystemPart::Context(Box::new(ScannerRig::new(setup.world.clone()))));
    for (&id, factory) in vehicles.iter().zip(factories) {
        for part in factory(id, &setup.world) {
            sim.add(SystemPart::Sut(part));
        }
    }
    sim.run()
}
