//! Read-only acceptance checks over vehicle traces.
//!
//! Validators consume [`TraceSample`]s in timestamp order and settle on a
//! [`Verdict`]. A verdict still pending when the trace ends is failed, so
//! an aborted run cannot pass. The same validators run live inside a
//! simulation and offline over a recording.

use std::fmt;

use thiserror::Error;

use crate::dmcp::{ConfigError, ConfigurationSet};
use crate::geometry::{point_polyline_distance, Vec2};
use crate::messages::{type_id, Message, RunInfo};
use crate::recording::Entry;
use crate::scenario::{RouteError, RouteGraph, WaypointId};
use crate::serialization::DecodeError;
use crate::vehicle::StateReport;

pub const DESTINATION_REACHED: &str = "DestinationReached";
pub const SHORTEST_ROUTE_CHOSEN: &str = "ShortestRouteChosen";
pub const DISTANCE_TO_ROUTE: &str = "DistanceToRoute";

pub const DEFAULT_PASS_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub vehicle_id: u32,
    pub position: Vec2,
    pub heading: f64,
    pub timestamp: i64,
}

impl From<&StateReport> for TraceSample {
    fn from(r: &StateReport) -> Self {
        Self {
            vehicle_id: r.vehicle_id,
            position: r.state.position,
            heading: r.state.heading,
            timestamp: r.state.timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pending,
    Passed,
    Failed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pending => "PENDING",
            Status::Passed => "PASSED",
            Status::Failed => "FAILED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub validator: String,
    pub vehicle_id: u32,
    pub status: Status,
    /// Timestamp of the sample that settled the verdict.
    pub finalized_at: Option<i64>,
    pub detail: String,
}

impl Verdict {
    fn pending(validator: &str, vehicle_id: u32) -> Self {
        Self {
            validator: validator.to_string(),
            vehicle_id,
            status: Status::Pending,
            finalized_at: None,
            detail: String::new(),
        }
    }

    pub fn is_final(&self) -> bool {
        self.status != Status::Pending
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Passed
    }

    fn settle(&mut self, status: Status, at: Option<i64>, detail: String) {
        if !self.is_final() {
            self.status = status;
            self.finalized_at = at;
            self.detail = detail;
        }
    }
}

/// One report line: `VALIDATOR <name> vehicle=<id> PASSED|FAILED <detail>`.
impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "VALIDATOR {} vehicle={} {} {}",
            self.validator, self.vehicle_id, self.status, self.detail
        )
    }
}

pub trait Validator: Send {
    fn verdict(&self) -> &Verdict;

    fn observe(&mut self, sample: &TraceSample);

    /// Ends the trace; `last` is the timestamp of the final sample seen.
    fn finish(&mut self, last: Option<i64>);
}

fn xy(p: Vec2) -> String {
    format!("({:.3},{:.3})", p.x, p.y)
}

/// Passes at the first sample within `radius` of `destination`.
pub struct DestinationReached {
    destination: Vec2,
    radius: f64,
    closest: f64,
    verdict: Verdict,
}

impl DestinationReached {
    pub fn new(vehicle_id: u32, destination: Vec2, radius: f64) -> Self {
        Self {
            destination,
            radius,
            closest: f64::INFINITY,
            verdict: Verdict::pending(DESTINATION_REACHED, vehicle_id),
        }
    }
}

impl Validator for DestinationReached {
    fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    fn observe(&mut self, s: &TraceSample) {
        if self.verdict.is_final() {
            return;
        }
        let d = s.position.distance(self.destination);
        self.closest = self.closest.min(d);
        if d <= self.radius {
            let detail = format!("distance={d:.3} at {} t={}", xy(s.position), s.timestamp);
            self.verdict.settle(Status::Passed, Some(s.timestamp), detail);
        }
    }

    fn finish(&mut self, last: Option<i64>) {
        let detail = format!("closest={:.3} radius={:.3}", self.closest, self.radius);
        self.verdict.settle(Status::Failed, last, detail);
    }
}

/// Passes once every waypoint of the reference route has been approached
/// within the pass radius, in route order.
pub struct ShortestRouteChosen {
    route: Vec<(WaypointId, Vec2)>,
    pass_radius: f64,
    next: usize,
    verdict: Verdict,
}

impl ShortestRouteChosen {
    pub fn new(vehicle_id: u32, route: Vec<(WaypointId, Vec2)>, pass_radius: f64) -> Self {
        Self {
            route,
            pass_radius,
            next: 0,
            verdict: Verdict::pending(SHORTEST_ROUTE_CHOSEN, vehicle_id),
        }
    }

    /// Computes the reference route on `graph`.
    pub fn from_graph(
        vehicle_id: u32,
        graph: &RouteGraph,
        from: WaypointId,
        to: WaypointId,
        pass_radius: f64,
    ) -> Result<Self, SuiteError> {
        let route = graph
            .shortest_route(from, to)?
            .ok_or(SuiteError::NoRoute { from, to })?;
        let points = route
            .waypoints
            .iter()
            .map(|&w| Ok((w, graph.position(w)?)))
            .collect::<Result<_, RouteError>>()?;
        Ok(Self::new(vehicle_id, points, pass_radius))
    }

    pub fn route(&self) -> &[(WaypointId, Vec2)] {
        &self.route
    }
}

impl Validator for ShortestRouteChosen {
    fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    fn observe(&mut self, s: &TraceSample) {
        if self.verdict.is_final() {
            return;
        }
        while self.next < self.route.len() && s.position.distance(self.route[self.next].1) <= self.pass_radius {
            self.next += 1;
        }
        if self.next == self.route.len() {
            let detail = format!("passed {}/{} waypoints t={}", self.next, self.route.len(), s.timestamp);
            self.verdict.settle(Status::Passed, Some(s.timestamp), detail);
        }
    }

    fn finish(&mut self, last: Option<i64>) {
        if let Some((id, _)) = self.route.get(self.next) {
            let detail = format!("waypoint {id} not passed ({}/{} passed)", self.next, self.route.len());
            self.verdict.settle(Status::Failed, last, detail);
        }
    }
}

/// Fails at the first sample farther than `max_deviation` from the route
/// polyline; passes when the trace ends without one.
pub struct DistanceToRoute {
    polyline: Vec<Vec2>,
    max_deviation: f64,
    worst: f64,
    verdict: Verdict,
}

impl DistanceToRoute {
    pub fn new(vehicle_id: u32, polyline: Vec<Vec2>, max_deviation: f64) -> Self {
        Self {
            polyline,
            max_deviation,
            worst: 0.0,
            verdict: Verdict::pending(DISTANCE_TO_ROUTE, vehicle_id),
        }
    }

    /// Largest distance seen so far.
    pub fn worst(&self) -> f64 {
        self.worst
    }
}

impl Validator for DistanceToRoute {
    fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    fn observe(&mut self, s: &TraceSample) {
        if self.verdict.is_final() {
            return;
        }
        let d = point_polyline_distance(s.position, &self.polyline);
        self.worst = self.worst.max(d);
        if d > self.max_deviation {
            let detail = format!(
                "distance={d:.3} at {} t={} max={:.3}",
                xy(s.position),
                s.timestamp,
                self.max_deviation
            );
            self.verdict.settle(Status::Failed, Some(s.timestamp), detail);
        }
    }

    fn finish(&mut self, last: Option<i64>) {
        let detail = format!("worst={:.3} max={:.3}", self.worst, self.max_deviation);
        self.verdict.settle(Status::Passed, last, detail);
    }
}

/// Validators for one vehicle. Samples of other vehicles and samples not
/// newer than the previous one are ignored.
pub struct VehicleChecks {
    vehicle_id: u32,
    validators: Vec<Box<dyn Validator>>,
    last: Option<i64>,
}

impl VehicleChecks {
    pub fn new(vehicle_id: u32, validators: Vec<Box<dyn Validator>>) -> Self {
        Self {
            vehicle_id,
            validators,
            last: None,
        }
    }

    pub fn vehicle_id(&self) -> u32 {
        self.vehicle_id
    }

    pub fn observe(&mut self, s: &TraceSample) {
        if s.vehicle_id != self.vehicle_id || self.last.is_some_and(|t| s.timestamp <= t) {
            return;
        }
        self.last = Some(s.timestamp);
        for v in &mut self.validators {
            v.observe(s);
        }
    }

    pub fn finish(&mut self) {
        for v in &mut self.validators {
            v.finish(self.last);
        }
    }

    pub fn all_final(&self) -> bool {
        self.validators.iter().all(|v| v.verdict().is_final())
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.validators.iter().map(|v| v.verdict())
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("no route from {from} to {to}")]
    NoRoute { from: WaypointId, to: WaypointId },
    #[error("`{key}` must be positive, got {value}")]
    NonPositive { key: &'static str, value: f64 },
    #[error("recording: {0}")]
    Recording(String),
}

/// Suite configuration:
///
/// ```text
/// mission.from=1.1.1.1
/// mission.to=1.2.1.3
/// destinationreached.radius=3
/// shortestroutechosen.passradius=2
/// distancetoroute.maxdeviation=1.5
/// ```
///
/// A validator is enabled when its parameter key is present;
/// `shortestroutechosen.enabled=true` enables the route check with the
/// default pass radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub from: WaypointId,
    pub to: WaypointId,
    pub destination_radius: Option<f64>,
    pub pass_radius: Option<f64>,
    pub max_deviation: Option<f64>,
}

impl SuiteSpec {
    pub fn from_config(cfg: &ConfigurationSet) -> Result<Self, SuiteError> {
        let positive = |key: &'static str| -> Result<Option<f64>, SuiteError> {
            match cfg.get_parsed::<f64>(key)? {
                Some(v) if !(v > 0.0 && v.is_finite()) => Err(SuiteError::NonPositive { key, value: v }),
                other => Ok(other),
            }
        };
        let mut pass_radius = positive("shortestroutechosen.passradius")?;
        if pass_radius.is_none() && cfg.get_or("shortestroutechosen.enabled", false)? {
            pass_radius = Some(DEFAULT_PASS_RADIUS);
        }
        Ok(Self {
            from: cfg.require("mission.from")?,
            to: cfg.require("mission.to")?,
            destination_radius: positive("destinationreached.radius")?,
            pass_radius,
            max_deviation: positive("distancetoroute.maxdeviation")?,
        })
    }

    /// Validators for `vehicle_id`, in report order. Fails when the
    /// mission has no route.
    pub fn instantiate(&self, graph: &RouteGraph, vehicle_id: u32) -> Result<VehicleChecks, SuiteError> {
        let route = graph
            .shortest_route(self.from, self.to)?
            .ok_or(SuiteError::NoRoute {
                from: self.from,
                to: self.to,
            })?;
        let polyline = graph.polyline(&route.waypoints)?;
        let mut v: Vec<Box<dyn Validator>> = Vec::new();
        if let Some(r) = self.destination_radius {
            v.push(Box::new(DestinationReached::new(vehicle_id, graph.position(self.to)?, r)));
        }
        if let Some(r) = self.pass_radius {
            let points = route.waypoints.iter().copied().zip(polyline.iter().copied()).collect();
            v.push(Box::new(ShortestRouteChosen::new(vehicle_id, points, r)));
        }
        if let Some(m) = self.max_deviation {
            let line = if polyline.len() == 1 {
                vec![polyline[0], polyline[0]]
            } else {
                polyline
            };
            v.push(Box::new(DistanceToRoute::new(vehicle_id, line, m)));
        }
        Ok(VehicleChecks::new(vehicle_id, v))
    }
}

/// Evaluates a suite over recorded entries. SUT vehicles are taken from
/// the run-info marker; their vehicle-state containers form the traces.
pub fn evaluate_recording(entries: &[Entry], spec: &SuiteSpec, graph: &RouteGraph) -> Result<Vec<Verdict>, SuiteError> {
    let bad = |e: DecodeError| SuiteError::Recording(e.to_string());
    let mut checks: Option<Vec<VehicleChecks>> = None;
    for entry in entries {
        let c = entry.container().map_err(bad)?;
        match c.data_type_id {
            type_id::RUN_INFO if checks.is_none() => {
                let info = RunInfo::from_container(&c).map_err(bad)?;
                checks = Some(
                    info.sut_vehicles
                        .iter()
                        .map(|&id| spec.instantiate(graph, id))
                        .collect::<Result<_, _>>()?,
                );
            }
            type_id::VEHICLE_STATE => {
                let Some(checks) = checks.as_mut() else {
                    continue;
                };
                let sample = TraceSample::from(&StateReport::from_container(&c).map_err(bad)?);
                for v in checks.iter_mut() {
                    v.observe(&sample);
                }
            }
            _ => {}
        }
    }
    let mut checks = checks.ok_or_else(|| SuiteError::Recording("no run-info marker".into()))?;
    for v in &mut checks {
        v.finish();
    }
    Ok(checks.iter().flat_map(|c| c.verdicts().cloned()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: f64, y: f64, t: i64) -> TraceSample {
        TraceSample {
            vehicle_id: 1,
            position: Vec2::new(x, y),
            heading: 0.0,
            timestamp: t,
        }
    }

    fn run(v: &mut dyn Validator, trace: &[(f64, f64)]) {
        for (i, &(x, y)) in trace.iter().enumerate() {
            v.observe(&sample(x, y, i as i64));
        }
        v.finish(Some(trace.len() as i64 - 1));
    }

    #[test]
    fn destination_examples() {
        let mut v = DestinationReached::new(1, Vec2::new(10.0, 0.0), 1.0);
        run(&mut v, &[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)]);
        assert!(v.verdict().passed());
        assert_eq!(v.verdict().finalized_at, Some(2));

        let mut v = DestinationReached::new(1, Vec2::new(10.0, 0.0), 1.0);
        run(&mut v, &[(0.0, 0.0), (5.0, 0.0)]);
        assert_eq!(v.verdict().status, Status::Failed);
        assert_eq!(v.verdict().finalized_at, Some(1));

        let mut v = DestinationReached::new(1, Vec2::new(10.0, 0.0), 1.0);
        run(&mut v, &[(9.5, 0.0), (20.0, 0.0)]);
        assert!(v.verdict().passed());
        assert_eq!(v.verdict().finalized_at, Some(0));
    }

    fn diamond() -> Vec<(WaypointId, Vec2)> {
        // A, C, B, D
        [(1, (0.0, 0.0)), (3, (5.0, -5.0)), (2, (5.0, 5.0)), (4, (10.0, 0.0))]
            .iter()
            .map(|&(n, (x, y))| (WaypointId::new(1, 1, 1, n), Vec2::new(x, y)))
            .collect()
    }

    #[test]
    fn route_in_order_passes() {
        let mut v = ShortestRouteChosen::new(1, diamond(), 1.0);
        run(&mut v, &[(0.0, 0.0), (5.0, -5.0), (5.0, 5.0), (10.0, 0.0)]);
        assert!(v.verdict().passed());
    }

    #[test]
    fn long_branch_fails_at_c() {
        let mut v = ShortestRouteChosen::new(1, diamond(), 1.0);
        run(&mut v, &[(0.0, 0.0), (5.0, 5.0), (10.0, 0.0)]);
        assert_eq!(v.verdict().status, Status::Failed);
        assert!(v.verdict().detail.starts_with("waypoint 1.1.1.3 not passed"));
    }

    #[test]
    fn out_of_order_fails() {
        let mut v = ShortestRouteChosen::new(1, diamond(), 1.0);
        run(&mut v, &[(0.0, 0.0), (5.0, 5.0), (5.0, -5.0), (10.0, 0.0)]);
        assert_eq!(v.verdict().status, Status::Failed);
        assert!(v.verdict().detail.contains("1.1.1.2"));
    }

    #[test]
    fn single_waypoint_route_passes_immediately() {
        let mut v = ShortestRouteChosen::new(1, vec![(WaypointId::new(1, 1, 1, 1), Vec2::ZERO)], 2.0);
        v.observe(&sample(0.5, 0.0, 7));
        assert!(v.verdict().passed());
        assert_eq!(v.verdict().finalized_at, Some(7));
    }

    #[test]
    fn distance_examples() {
        let line = vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)];
        let mut v = DistanceToRoute::new(1, line.clone(), 2.0);
        run(&mut v, &[(0.0, 0.0), (0.0, 5.0), (1.0, 0.0)]);
        assert_eq!(v.verdict().status, Status::Failed);
        assert!(v.verdict().detail.starts_with("distance=5.000"));
        assert_eq!(v.verdict().finalized_at, Some(1));

        let mut v = DistanceToRoute::new(1, line.clone(), 2.0);
        run(&mut v, &[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)]);
        assert!(v.verdict().passed());
        assert_eq!(v.worst(), 0.0);

        let mut v = DistanceToRoute::new(1, line, 10.0);
        run(&mut v, &[(13.0, 4.0)]);
        assert_eq!(v.worst(), 5.0);
    }

    #[test]
    fn checks_ignore_stale_and_foreign_samples() {
        let v: Vec<Box<dyn Validator>> = vec![Box::new(DestinationReached::new(1, Vec2::new(10.0, 0.0), 1.0))];
        let mut checks = VehicleChecks::new(1, v);
        checks.observe(&sample(0.0, 0.0, 5));
        checks.observe(&sample(10.0, 0.0, 5));
        checks.observe(&TraceSample {
            vehicle_id: 2,
            ..sample(10.0, 0.0, 6)
        });
        assert!(!checks.all_final());
        checks.finish();
        assert_eq!(checks.verdicts().next().unwrap().status, Status::Failed);
    }

    #[test]
    fn verdict_line() {
        let mut v = Verdict::pending(DISTANCE_TO_ROUTE, 4);
        v.settle(Status::Passed, Some(1), "worst=0.100 max=1.000".into());
        assert_eq!(v.to_string(), "VALIDATOR DistanceToRoute vehicle=4 PASSED worst=0.100 max=1.000");
    }
}
