//! A minimal system under test: plans the shortest route for its mission
//! and follows it with pure pursuit.

use std::sync::Arc;

use super::{ActivePart, PartError, SetupContext};
use crate::bus::{BusHandle, DataStore, Filter};
use crate::dmcp::{ConfigurationSet, DmcpClient, LifecycleState, ModuleDescriptor};
use crate::geometry::{closest_point_on_segment, normalize_angle, Vec2};
use crate::messages::{type_id, Message};
use crate::scenario::{RouteGraph, WaypointId};
use crate::vehicle::{CommandMessage, PolylinePath, StateReport, VehicleCommand, VehicleState};

pub const AUTOPILOT_MODULE: &str = "autopilot";

const PULSE_PERIOD_US: i64 = 1_000_000;
/// Comfortable deceleration used to plan the stop at the destination.
const STOP_DECEL: f64 = 2.0;
const SPEED_GAIN: f64 = 1.5;
const MAX_BRAKE: f64 = 8.0;
/// Distance before the route end at which the vehicle aims to stand.
const STOP_MARGIN: f64 = 0.5;
/// Segments ahead of the current one searched when projecting.
const SEARCH_AHEAD: usize = 3;

#[derive(Debug, Clone)]
struct Settings {
    speed: f64,
    lookahead: f64,
    wheelbase: f64,
}

/// Reads `autopilot.mission.{from,to,via}`, `autopilot.speed` (m/s,
/// default 8), `autopilot.lookahead` (m, default 5) and
/// `autopilot.wheelbase` (m, default 2.65). `via` is a comma-separated
/// waypoint list the route must pass through.
pub struct Autopilot {
    vehicle_id: u32,
    graph: Arc<RouteGraph>,
    client: DmcpClient,
    settings: Settings,
    path: Option<PolylinePath>,
    progress: f64,
    segment: usize,
    inbox: Arc<DataStore>,
    state: Option<VehicleState>,
}

impl Autopilot {
    pub fn new(vehicle_id: u32, graph: Arc<RouteGraph>) -> Self {
        Self {
            vehicle_id,
            graph,
            client: DmcpClient::new(ModuleDescriptor::new(AUTOPILOT_MODULE, vehicle_id, env!("CARGO_PKG_VERSION"))),
            settings: Settings {
                speed: 8.0,
                lookahead: 5.0,
                wheelbase: 2.65,
            },
            path: None,
            progress: 0.0,
            segment: 0,
            inbox: Arc::new(DataStore::fifo()),
            state: None,
        }
    }

    fn plan(&self, cfg: &ConfigurationSet) -> Result<Vec<WaypointId>, PartError> {
        let from: WaypointId = cfg.require("autopilot.mission.from").map_err(PartError::new)?;
        let to: WaypointId = cfg.require("autopilot.mission.to").map_err(PartError::new)?;
        let mut stops = vec![from];
        if let Some(via) = cfg.get("autopilot.mission.via") {
            for w in via.split(',').map(str::trim).filter(|w| !w.is_empty()) {
                stops.push(w.parse().map_err(PartError::new)?);
            }
        }
        stops.push(to);
        let mut route = vec![from];
        for leg in stops.windows(2) {
            let r = self
                .graph
                .shortest_route(leg[0], leg[1])
                .map_err(PartError::new)?
                .ok_or_else(|| PartError::new(format!("no route from {} to {}", leg[0], leg[1])))?;
            route.extend_from_slice(&r.waypoints[1..]);
        }
        Ok(route)
    }

    /// Advances the projection of `p` onto the path, never moving back.
    fn project(&mut self, path: &PolylinePath, p: Vec2) {
        let pts = path.points();
        if pts.len() < 2 {
            return;
        }
        let last = (self.segment + SEARCH_AHEAD).min(pts.len() - 2);
        let mut best = (f64::INFINITY, self.segment, self.progress);
        for i in self.segment..=last {
            let q = closest_point_on_segment(p, pts[i], pts[i + 1]);
            let d = q.distance(p);
            if d < best.0 {
                best = (d, i, path.arc_length_at(i) + pts[i].distance(q));
            }
        }
        if best.2 >= self.progress {
            self.segment = best.1;
            self.progress = best.2;
        }
    }

    fn control(&mut self, s: &VehicleState) -> VehicleCommand {
        let Some(path) = self.path.take() else {
            return VehicleCommand::default();
        };
        self.project(&path, s.position);
        let target = path.pose_at(self.progress + self.settings.lookahead).position;
        let to_target = target - s.position;
        let reach = to_target.norm().max(0.1);
        let alpha = normalize_angle(to_target.angle() - s.heading);
        let steering = (2.0 * self.settings.wheelbase * alpha.sin()).atan2(reach);
        let remaining = (path.length() - self.progress - STOP_MARGIN).max(0.0);
        let v = s.speed;
        let acceleration = if remaining <= 0.0 {
            -MAX_BRAKE
        } else if v * v >= 2.0 * STOP_DECEL * remaining {
            // Brake so as to come to rest exactly at the stop point.
            -(v * v / (2.0 * remaining)).min(MAX_BRAKE)
        } else {
            SPEED_GAIN * (self.settings.speed.min((2.0 * STOP_DECEL * remaining).sqrt()) - v)
        };
        self.path = Some(path);
        VehicleCommand { acceleration, steering }
    }
}

fn positive(cfg: &ConfigurationSet, key: &str, default: f64) -> Result<f64, PartError> {
    let v: f64 = cfg.get_or(key, default).map_err(PartError::new)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(PartError::new(format!("{key} must be positive, got {v}")))
    }
}

impl ActivePart for Autopilot {
    fn name(&self) -> String {
        format!("{AUTOPILOT_MODULE}:{}", self.vehicle_id)
    }

    fn descriptor(&self) -> ModuleDescriptor {
        self.client.descriptor().clone()
    }

    fn setup(&mut self, ctx: &SetupContext<'_>) -> Result<(), PartError> {
        let cfg = ctx.config;
        self.settings = Settings {
            speed: positive(cfg, "autopilot.speed", self.settings.speed)?,
            lookahead: positive(cfg, "autopilot.lookahead", self.settings.lookahead)?,
            wheelbase: positive(cfg, "autopilot.wheelbase", self.settings.wheelbase)?,
        };
        let route = self.plan(cfg)?;
        let points = self.graph.polyline(&route).map_err(PartError::new)?;
        self.path = PolylinePath::new(&points);
        ctx.bus
            .add_listener(Filter::only(type_id::VEHICLE_STATE), Arc::clone(&self.inbox))
            .map_err(PartError::new)?;
        Ok(())
    }

    fn step(&mut self, now: i64, bus: &BusHandle) -> Result<(), PartError> {
        if now % PULSE_PERIOD_US == 0 {
            bus.send(self.client.pulse_message(LifecycleState::Running, now));
        }
        for c in self.inbox.drain() {
            let r = StateReport::from_container(&c).map_err(PartError::new)?;
            if r.vehicle_id == self.vehicle_id {
                self.state = Some(r.state);
            }
        }
        if let Some(s) = self.state {
            let command = self.control(&s);
            let msg = CommandMessage {
                vehicle_id: self.vehicle_id,
                command,
            };
            bus.send(msg.to_container(now));
        }
        Ok(())
    }
}
