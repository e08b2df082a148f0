//! Vehicle motion: a kinematic bicycle model for externally driven
//! vehicles and a constant-speed polyline follower for scripted traffic.
//!
//! The bicycle model is integrated with forward Euler:
//! `x' = v cos θ`, `y' = v sin θ`, `θ' = (v / L) tan δ`, `v' = a`.
//! Steering setpoints apply instantly.

use thiserror::Error;

use crate::dmcp::{ConfigError, ConfigurationSet};
use crate::geometry::{normalize_angle, Pose, Vec2};
use crate::messages::{type_id, Message};
use crate::scenario::StartCondition;
use crate::serialization::{DecodeError, PayloadReader, PayloadWriter};

pub const DEFAULT_WHEELBASE: f64 = 2.65;
pub const DEFAULT_MAX_STEERING: f64 = 0.5;
pub const DEFAULT_MAX_ACCEL: f64 = 4.0;
pub const DEFAULT_MAX_DECEL: f64 = 8.0;
/// Largest integration step accepted by [`step_kinematic`], in seconds.
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VehicleError {
    #[error("time step {0} s outside (0, {MAX_DT}]")]
    InvalidStep(f64),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid vehicle parameter {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_steering: f64,
    pub max_accel: f64,
    pub max_decel: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: DEFAULT_WHEELBASE,
            max_steering: DEFAULT_MAX_STEERING,
            max_accel: DEFAULT_MAX_ACCEL,
            max_decel: DEFAULT_MAX_DECEL,
        }
    }
}

impl VehicleParams {
    /// Reads `vehicle.{wheelbase,maxsteering,maxaccel,maxdecel}`.
    pub fn from_config(cfg: &ConfigurationSet) -> Result<Self, ConfigError> {
        let d = Self::default();
        let p = Self {
            wheelbase: cfg.get_or("vehicle.wheelbase", d.wheelbase)?,
            max_steering: cfg.get_or("vehicle.maxsteering", d.max_steering)?,
            max_accel: cfg.get_or("vehicle.maxaccel", d.max_accel)?,
            max_decel: cfg.get_or("vehicle.maxdecel", d.max_decel)?,
        };
        let checks = [
            ("vehicle.wheelbase", p.wheelbase),
            ("vehicle.maxsteering", p.max_steering),
            ("vehicle.maxaccel", p.max_accel),
            ("vehicle.maxdecel", p.max_decel),
        ];
        for (key, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::InvalidValue {
                    key: key.to_string(),
                    value: v.to_string(),
                });
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub steering: f64,
    /// Simulation time in microseconds.
    pub timestamp: i64,
}

impl VehicleState {
    pub fn at(pose: Pose) -> Self {
        Self {
            position: pose.position,
            heading: normalize_angle(pose.heading),
            ..Self::default()
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.position,
            heading: self.heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleCommand {
    pub acceleration: f64,
    pub steering: f64,
}

/// One Euler step of length `dt` seconds.
pub fn step_kinematic(
    state: &VehicleState,
    command: &VehicleCommand,
    dt: f64,
    params: &VehicleParams,
) -> Result<VehicleState, VehicleError> {
    if !dt.is_finite() || dt <= 0.0 || dt > MAX_DT {
        return Err(VehicleError::InvalidStep(dt));
    }
    let inputs = [
        ("position", state.position.x),
        ("position", state.position.y),
        ("heading", state.heading),
        ("speed", state.speed),
        ("steering", state.steering),
        ("acceleration", command.acceleration),
        ("steering command", command.steering),
    ];
    if let Some((what, _)) = inputs.iter().find(|(_, v)| !v.is_finite()) {
        return Err(VehicleError::NonFinite(what));
    }
    if !(params.wheelbase > 0.0) {
        return Err(VehicleError::InvalidParameter("wheelbase"));
    }
    let accel = command.acceleration.clamp(-params.max_decel, params.max_accel);
    let steering = command.steering.clamp(-params.max_steering, params.max_steering);
    let v = state.speed.max(0.0);
    let (sin, cos) = state.heading.sin_cos();
    Ok(VehicleState {
        position: Vec2::new(state.position.x + v * cos * dt, state.position.y + v * sin * dt),
        heading: normalize_angle(state.heading + v / params.wheelbase * steering.tan() * dt),
        speed: (v + accel * dt).max(0.0),
        steering,
        timestamp: state.timestamp + (dt * 1e6).round() as i64,
    })
}

/// A polyline parameterized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylinePath {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl PolylinePath {
    /// Consecutive duplicate points are dropped. Returns `None` for an
    /// empty input.
    pub fn new(points: &[Vec2]) -> Option<Self> {
        let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
        for &p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if pts.is_empty() {
            return None;
        }
        let mut cumulative = vec![0.0];
        for w in pts.windows(2) {
            cumulative.push(cumulative.last().unwrap() + w[0].distance(w[1]));
        }
        Some(Self {
            points: pts,
            cumulative,
        })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arc length at which vertex `i` is reached.
    pub fn arc_length_at(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    /// Pose at arc length `s`, clamped to the path. The heading is the
    /// direction of the segment containing `s`; a vertex belongs to the
    /// segment that starts there, the end point to the last segment.
    pub fn pose_at(&self, s: f64) -> Pose {
        let n = self.points.len();
        if n == 1 {
            return Pose {
                position: self.points[0],
                heading: 0.0,
            };
        }
        if s >= self.length() {
            let (a, b) = (self.points[n - 2], self.points[n - 1]);
            return Pose {
                position: b,
                heading: (b - a).angle(),
            };
        }
        let s = s.max(0.0);
        let i = self.cumulative.partition_point(|&c| c <= s) - 1;
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        Pose {
            position: a.lerp(b, (s - self.cumulative[i]) / seg),
            heading: (b - a).angle(),
        }
    }
}

/// Whether a scripted object may start moving. `lookup` returns position
/// and speed of another object; `polygon` resolves ground polygon ids.
pub fn start_condition_met(
    cond: &StartCondition,
    lookup: impl Fn(u32) -> Option<(Vec2, f64)>,
    polygon: impl Fn(u32) -> Option<Vec<Vec2>>,
) -> bool {
    match cond {
        StartCondition::Immediately => true,
        StartCondition::OnMoving(id) => lookup(*id).is_some_and(|(_, v)| v > 0.0),
        StartCondition::OnEnteringPolygon { object, polygon: pid } => match (lookup(*object), polygon(*pid)) {
            (Some((p, _)), Some(poly)) => crate::geometry::point_in_polygon(p, &poly),
            _ => false,
        },
    }
}

/// Constant-speed follower of a waypoint polyline. Traffic controls are
/// ignored.
#[derive(Debug, Clone)]
pub struct ScriptedDriver {
    path: PolylinePath,
    speed: f64,
    start: StartCondition,
    stop_at: f64,
    travelled: f64,
    started: bool,
    last_speed: f64,
}

impl ScriptedDriver {
    /// `stop_at` is the arc length where the object halts; `None` means
    /// the end of the route.
    pub fn new(path: PolylinePath, speed: f64, start: StartCondition, stop_at: Option<f64>) -> Self {
        let end = path.length();
        Self {
            stop_at: stop_at.unwrap_or(end).min(end),
            path,
            speed,
            start,
            travelled: 0.0,
            started: false,
            last_speed: 0.0,
        }
    }

    pub fn start_condition(&self) -> &StartCondition {
        &self.start
    }

    pub fn started(&self) -> bool {
        self.started
    }

    /// Marks the start condition as satisfied. Starting is latched.
    pub fn start(&mut self) {
        self.started = true;
    }

    pub fn finished(&self) -> bool {
        self.travelled >= self.stop_at
    }

    pub fn travelled(&self) -> f64 {
        self.travelled
    }

    pub fn pose(&self) -> Pose {
        self.path.pose_at(self.travelled)
    }

    /// Speed over the most recent step.
    pub fn speed(&self) -> f64 {
        self.last_speed
    }

    pub fn path(&self) -> &PolylinePath {
        &self.path
    }

    /// Advances by `speed * dt` if started, halting at the stop point.
    pub fn step(&mut self, dt: f64) -> Pose {
        let before = self.travelled;
        if self.started && !self.finished() {
            self.travelled = (self.travelled + self.speed * dt).min(self.stop_at);
        }
        self.last_speed = if dt > 0.0 { (self.travelled - before) / dt } else { 0.0 };
        self.pose()
    }
}

/// Vehicle state tagged with its object id (dataTypeId 101).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateReport {
    pub vehicle_id: u32,
    pub state: VehicleState,
}

impl Message for StateReport {
    const TYPE_ID: u32 = type_id::VEHICLE_STATE;

    fn write(&self, w: &mut PayloadWriter) {
        let s = &self.state;
        w.put("vehicleId", &self.vehicle_id)
            .put("x", &s.position.x)
            .put("y", &s.position.y)
            .put("heading", &s.heading)
            .put("speed", &s.speed)
            .put("steering", &s.steering)
            .put("timestamp", &s.timestamp);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            vehicle_id: r.require("vehicleId")?,
            state: VehicleState {
                position: Vec2::new(r.require("x")?, r.require("y")?),
                heading: r.require("heading")?,
                speed: r.get_or("speed", 0.0)?,
                steering: r.get_or("steering", 0.0)?,
                timestamp: r.require("timestamp")?,
            },
        })
    }
}

/// Actuation request for one vehicle (dataTypeId 102).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandMessage {
    pub vehicle_id: u32,
    pub command: VehicleCommand,
}

impl Message for CommandMessage {
    const TYPE_ID: u32 = type_id::VEHICLE_COMMAND;

    fn write(&self, w: &mut PayloadWriter) {
        w.put("vehicleId", &self.vehicle_id)
            .put("acceleration", &self.command.acceleration)
            .put("steering", &self.command.steering);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            vehicle_id: r.require("vehicleId")?,
            command: VehicleCommand {
                acceleration: r.get_or("acceleration", 0.0)?,
                steering: r.get_or("steering", 0.0)?,
            },
        })
    }
}
