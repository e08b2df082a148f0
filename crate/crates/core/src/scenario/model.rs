use std::fmt;
use std::str::FromStr;

use crate::geometry::Vec2;

/// Globally addressable lane point `layer.road.lane.point`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaypointId(pub [u32; 4]);

impl WaypointId {
    pub const fn new(layer: u32, road: u32, lane: u32, point: u32) -> Self {
        Self([layer, road, lane, point])
    }

    pub fn layer(&self) -> u32 {
        self.0[0]
    }
    pub fn road(&self) -> u32 {
        self.0[1]
    }
    pub fn lane(&self) -> u32 {
        self.0[2]
    }
    pub fn point(&self) -> u32 {
        self.0[3]
    }
}

impl fmt::Display for WaypointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "{a}.{b}.{c}.{d}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidWaypointId(pub String);

impl fmt::Display for InvalidWaypointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` is not a waypoint id of the form layer.road.lane.point", self.0)
    }
}

impl std::error::Error for InvalidWaypointId {}

impl FromStr for WaypointId {
    type Err = InvalidWaypointId;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split('.').collect();
        if parts.len() != 4 {
            return Err(InvalidWaypointId(s.to_string()));
        }
        let mut out = [0u32; 4];
        for (slot, p) in out.iter_mut().zip(&parts) {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(InvalidWaypointId(s.to_string()));
            }
            *slot = p.parse().map_err(|_| InvalidWaypointId(s.to_string()))?;
        }
        Ok(WaypointId(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marking {
    Solid,
    Broken,
    None,
}

impl Marking {
    pub fn keyword(self) -> &'static str {
        match self {
            Marking::Solid => "solid",
            Marking::Broken => "broken",
            Marking::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub version: Option<String>,
    pub date: Option<String>,
    /// WGS84 latitude/longitude of the local origin; informational only.
    pub origin: Option<(f64, f64)>,
    pub ground: Vec<GroundShape>,
    pub layers: Vec<Layer>,
    pub zones: Vec<Zone>,
}

impl Scenario {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            version: None,
            date: None,
            origin: None,
            ground: Vec::new(),
            layers: Vec::new(),
            zones: Vec::new(),
        }
    }

    /// Every lane with its `(layer, road, lane)` ids.
    pub fn lanes(&self) -> impl Iterator<Item = ([u32; 3], &Lane)> {
        self.layers.iter().flat_map(|layer| {
            layer
                .roads
                .iter()
                .flat_map(move |road| road.lanes.iter().map(move |lane| ([layer.id, road.id, lane.id], lane)))
        })
    }

    /// Every waypoint with its global id, in declaration order.
    pub fn waypoints(&self) -> impl Iterator<Item = (WaypointId, Vec2)> + '_ {
        self.lanes().flat_map(|([l, r, n], lane)| {
            lane.points
                .iter()
                .map(move |p| (WaypointId::new(l, r, n, p.id), p.position))
        })
    }

    pub fn waypoint(&self, id: WaypointId) -> Option<Vec2> {
        self.waypoints().find(|(w, _)| *w == id).map(|(_, p)| p)
    }

    pub fn polygon(&self, id: u32) -> Option<&[Vec2]> {
        self.ground.iter().find_map(|g| match g {
            GroundShape::Polygon { id: pid, vertices, .. } if *pid == id => Some(vertices.as_slice()),
            _ => None,
        })
    }

    /// Total number of stationary entity instances described.
    pub fn entity_count(&self) -> usize {
        let lanes: usize = self
            .lanes()
            .map(|(_, l)| 1 + l.points.len() + l.connectors.len() + l.traffic_controls.len())
            .sum();
        let roads: usize = self.layers.iter().map(|l| l.roads.len()).sum();
        let zones: usize = self.zones.iter().map(|z| 1 + z.spots.len()).sum();
        self.ground.len() + self.layers.len() + roads + lanes + zones
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundShape {
    Polygon { id: u32, height: f64, vertices: Vec<Vec2> },
    Cylinder { id: u32, center: Vec2, radius: f64, height: f64 },
}

impl GroundShape {
    pub fn id(&self) -> u32 {
        match self {
            GroundShape::Polygon { id, .. } | GroundShape::Cylinder { id, .. } => *id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub id: u32,
    pub height: f64,
    pub roads: Vec<Road>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: u32,
    pub name: String,
    pub lanes: Vec<Lane>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: u32,
    pub width: f64,
    pub left_marking: Marking,
    pub right_marking: Marking,
    pub speed_limit: Option<f64>,
    /// Travel direction follows declaration order.
    pub points: Vec<LanePoint>,
    pub connectors: Vec<Connector>,
    pub traffic_controls: Vec<TrafficControl>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanePoint {
    pub id: u32,
    pub position: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connector {
    pub from: WaypointId,
    pub to: WaypointId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficControl {
    StopSign(WaypointId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: u32,
    pub name: String,
    pub perimeter: Vec<WaypointId>,
    pub spots: Vec<Spot>,
}

/// A parking spot; parsed and exposed, never routable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spot {
    pub id: u32,
    pub first: Vec2,
    pub second: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Situation {
    pub name: String,
    pub version: Option<String>,
    pub scenario: String,
    pub objects: Vec<SituationObject>,
}

impl Situation {
    pub fn object(&self, id: u32) -> Option<&SituationObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Objects driven from outside (one per system under test).
    pub fn external_objects(&self) -> impl Iterator<Item = &SituationObject> {
        self.objects
            .iter()
            .filter(|o| matches!(o.behavior, Behavior::ExternalDriver { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SituationObject {
    pub id: u32,
    pub name: String,
    pub shape: Shape,
    pub behavior: Behavior,
    pub start: StartCondition,
    pub stop: StopCondition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Rectangle { length: f64, width: f64, height: f64 },
}

pub const DEFAULT_OBJECT_HEIGHT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    PointIdDriver { route: Vec<WaypointId>, speed: f64 },
    /// Driven by a system under test, starting at `start` facing along the lane.
    ExternalDriver { start: WaypointId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartCondition {
    Immediately,
    OnMoving(u32),
    OnEnteringPolygon { object: u32, polygon: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCondition {
    EndOfRoute,
    OnReachingPoint(WaypointId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Scenario(Scenario),
    Situation(Situation),
}
