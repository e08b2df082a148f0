use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::model::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    DuplicateId,
    DanglingConnector,
    DanglingReference,
    TooFewWaypoints,
    NonPositiveWidth,
    ZeroLengthEdge,
    InvalidGeometry,
    ScenarioMismatch,
    InvalidSpeed,
    InvalidRoute,
}

/// One violated invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticError {
    pub id: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:?}]: {}", self.id, self.rule, self.message)
    }
}

struct Errors(Vec<SemanticError>);

impl Errors {
    fn push(&mut self, id: impl fmt::Display, rule: Rule, message: impl Into<String>) {
        self.0.push(SemanticError {
            id: id.to_string(),
            rule,
            message: message.into(),
        });
    }

    fn duplicates<I: IntoIterator<Item = u32>>(&mut self, scope: &str, ids: I) {
        let mut seen = BTreeSet::new();
        let mut reported = BTreeSet::new();
        for id in ids {
            if !seen.insert(id) && reported.insert(id) {
                self.push(format!("{scope}{id}"), Rule::DuplicateId, "id declared more than once");
            }
        }
    }
}

fn finite_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Checks every scenario invariant. An empty result means the model is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<SemanticError> {
    let mut e = Errors(Vec::new());

    e.duplicates("ground ", s.ground.iter().map(GroundShape::id));
    for g in &s.ground {
        match g {
            GroundShape::Polygon { id, height, vertices } => {
                if vertices.len() < 3 {
                    e.push(format!("polygon {id}"), Rule::InvalidGeometry, "needs at least 3 vertices");
                }
                if !(height.is_finite() && *height >= 0.0) {
                    e.push(format!("polygon {id}"), Rule::InvalidGeometry, "height must be >= 0");
                }
            }
            GroundShape::Cylinder { id, radius, height, .. } => {
                if !finite_positive(*radius) {
                    e.push(format!("cylinder {id}"), Rule::InvalidGeometry, "radius must be > 0");
                }
                if !(height.is_finite() && *height >= 0.0) {
                    e.push(format!("cylinder {id}"), Rule::InvalidGeometry, "height must be >= 0");
                }
            }
        }
    }

    e.duplicates("layer ", s.layers.iter().map(|l| l.id));
    for layer in &s.layers {
        e.duplicates(&format!("road {}.", layer.id), layer.roads.iter().map(|r| r.id));
        for road in &layer.roads {
            e.duplicates(&format!("lane {}.{}.", layer.id, road.id), road.lanes.iter().map(|l| l.id));
        }
    }

    let mut positions: BTreeMap<WaypointId, crate::geometry::Vec2> = BTreeMap::new();
    for ([l, r, n], lane) in s.lanes() {
        let lane_id = format!("lane {l}.{r}.{n}");
        e.duplicates(&format!("waypoint {l}.{r}.{n}."), lane.points.iter().map(|p| p.id));
        for p in &lane.points {
            positions.entry(WaypointId::new(l, r, n, p.id)).or_insert(p.position);
        }
        if lane.points.len() < 2 {
            e.push(&lane_id, Rule::TooFewWaypoints, "a lane needs at least 2 waypoints");
        }
        if !finite_positive(lane.width) {
            e.push(&lane_id, Rule::NonPositiveWidth, "width must be > 0");
        }
        if lane.speed_limit.is_some_and(|v| !finite_positive(v)) {
            e.push(&lane_id, Rule::InvalidSpeed, "speed limit must be > 0");
        }
        for w in lane.points.windows(2) {
            if w[0].position == w[1].position {
                e.push(
                    WaypointId::new(l, r, n, w[1].id),
                    Rule::ZeroLengthEdge,
                    "coincides with the previous waypoint",
                );
            }
        }
    }

    for (_, lane) in s.lanes() {
        for c in &lane.connectors {
            let id = format!("connector {} -> {}", c.from, c.to);
            match (positions.get(&c.from), positions.get(&c.to)) {
                (Some(a), Some(b)) => {
                    if a == b {
                        e.push(id, Rule::ZeroLengthEdge, "connector endpoints coincide");
                    }
                }
                (from, to) => {
                    let which: Vec<String> = [(from, c.from), (to, c.to)]
                        .iter()
                        .filter(|(p, _)| p.is_none())
                        .map(|(_, w)| w.to_string())
                        .collect();
                    e.push(id, Rule::DanglingConnector, format!("unknown waypoint {}", which.join(", ")));
                }
            }
        }
        for TrafficControl::StopSign(at) in &lane.traffic_controls {
            if !positions.contains_key(at) {
                e.push(format!("stop sign {at}"), Rule::DanglingReference, "unknown waypoint");
            }
        }
    }

    e.duplicates("zone ", s.zones.iter().map(|z| z.id));
    for z in &s.zones {
        e.duplicates(&format!("spot {}.", z.id), z.spots.iter().map(|p| p.id));
        for w in &z.perimeter {
            if !positions.contains_key(w) {
                e.push(format!("zone {}", z.id), Rule::DanglingReference, format!("unknown perimeter waypoint {w}"));
            }
        }
    }
    e.0
}

/// Checks situation invariants; with a scenario, also every cross reference.
pub fn validate_situation(sit: &Situation, scenario: Option<&Scenario>) -> Vec<SemanticError> {
    let mut e = Errors(Vec::new());
    e.duplicates("object ", sit.objects.iter().map(|o| o.id));
    let object_ids: BTreeSet<u32> = sit.objects.iter().map(|o| o.id).collect();
    let waypoints: Option<BTreeSet<WaypointId>> = scenario.map(|s| s.waypoints().map(|(w, _)| w).collect());

    if let Some(s) = scenario {
        if s.name != sit.scenario {
            e.push(
                format!("situation {:?}", sit.name),
                Rule::ScenarioMismatch,
                format!("refers to scenario {:?}, loaded {:?}", sit.scenario, s.name),
            );
        }
    }
    let check_wp = |e: &mut Errors, obj: u32, w: &WaypointId| {
        if let Some(known) = &waypoints {
            if !known.contains(w) {
                e.push(format!("object {obj}"), Rule::DanglingReference, format!("unknown waypoint {w}"));
            }
        }
    };

    for o in &sit.objects {
        let oid = format!("object {}", o.id);
        let Shape::Rectangle { length, width, height } = o.shape;
        if !(finite_positive(length) && finite_positive(width) && finite_positive(height)) {
            e.push(&oid, Rule::InvalidGeometry, "rectangle dimensions must be > 0");
        }
        match &o.behavior {
            Behavior::PointIdDriver { route, speed } => {
                if !finite_positive(*speed) {
                    e.push(&oid, Rule::InvalidSpeed, "speed must be > 0");
                }
                if route.len() < 2 {
                    e.push(&oid, Rule::InvalidRoute, "route needs at least 2 waypoints");
                }
                for w in route {
                    check_wp(&mut e, o.id, w);
                }
                if let StopCondition::OnReachingPoint(w) = o.stop {
                    if !route.contains(&w) {
                        e.push(&oid, Rule::InvalidRoute, format!("stop waypoint {w} is not on the route"));
                    }
                }
            }
            Behavior::ExternalDriver { start } => check_wp(&mut e, o.id, start),
        }
        match o.start {
            StartCondition::Immediately => {}
            StartCondition::OnMoving(other) => {
                if !object_ids.contains(&other) || other == o.id {
                    e.push(&oid, Rule::DanglingReference, format!("start waits on unknown object {other}"));
                }
            }
            StartCondition::OnEnteringPolygon { object, polygon } => {
                if !object_ids.contains(&object) || object == o.id {
                    e.push(&oid, Rule::DanglingReference, format!("start waits on unknown object {object}"));
                }
                if let Some(s) = scenario {
                    if s.polygon(polygon).is_none() {
                        e.push(&oid, Rule::DanglingReference, format!("unknown polygon {polygon}"));
                    }
                }
            }
        }
    }
    e.0
}
