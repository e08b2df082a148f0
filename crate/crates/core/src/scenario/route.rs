use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use thiserror::Error;

use super::model::{Scenario, WaypointId};
use crate::geometry::Vec2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("unknown waypoint {0}")]
    UnknownWaypoint(WaypointId),
    #[error("edge {from} -> {to} has invalid weight {weight}")]
    InvalidWeight {
        from: WaypointId,
        to: WaypointId,
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub waypoints: Vec<WaypointId>,
    pub cost: f64,
}

/// Directed waypoint graph weighted by Euclidean length.
#[derive(Debug, Clone, Default)]
pub struct RouteGraph {
    nodes: BTreeMap<WaypointId, Vec2>,
    adjacency: BTreeMap<WaypointId, Vec<(WaypointId, f64)>>,
}

impl RouteGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Lanes contribute edges between consecutive points in declaration
    /// order; connectors add the edges they name. Expects a validated
    /// scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        let mut g = Self::new();
        for (id, p) in s.waypoints() {
            g.add_node(id, p);
        }
        for ([l, r, n], lane) in s.lanes() {
            for w in lane.points.windows(2) {
                let (a, b) = (WaypointId::new(l, r, n, w[0].id), WaypointId::new(l, r, n, w[1].id));
                if let Err(e) = g.add_euclidean_edge(a, b) {
                    log::warn!("skipping lane edge: {e}");
                }
            }
            for c in &lane.connectors {
                if let Err(e) = g.add_euclidean_edge(c.from, c.to) {
                    log::warn!("skipping connector: {e}");
                }
            }
        }
        g
    }

    pub fn add_node(&mut self, id: WaypointId, position: Vec2) {
        self.nodes.insert(id, position);
    }

    pub fn add_edge(&mut self, from: WaypointId, to: WaypointId, weight: f64) -> Result<(), RouteError> {
        for id in [from, to] {
            if !self.nodes.contains_key(&id) {
                return Err(RouteError::UnknownWaypoint(id));
            }
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(RouteError::InvalidWeight { from, to, weight });
        }
        self.adjacency.entry(from).or_default().push((to, weight));
        Ok(())
    }

    pub fn add_euclidean_edge(&mut self, from: WaypointId, to: WaypointId) -> Result<(), RouteError> {
        let a = self.position(from)?;
        let b = self.position(to)?;
        self.add_edge(from, to, a.distance(b))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum()
    }

    pub fn contains(&self, id: WaypointId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn position(&self, id: WaypointId) -> Result<Vec2, RouteError> {
        self.nodes.get(&id).copied().ok_or(RouteError::UnknownWaypoint(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (WaypointId, Vec2)> + '_ {
        self.nodes.iter().map(|(k, v)| (*k, *v))
    }

    pub fn edges_from(&self, id: WaypointId) -> &[(WaypointId, f64)] {
        self.adjacency.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Dijkstra from `from` to `to`. Nodes are settled in ascending
    /// `(distance, waypoint id)` order and a node keeps the predecessor
    /// that first reached its final distance, so equal-cost alternatives
    /// resolve the same way every time. `Ok(None)` means unreachable.
    pub fn shortest_route(&self, from: WaypointId, to: WaypointId) -> Result<Option<Route>, RouteError> {
        for id in [from, to] {
            if !self.contains(id) {
                return Err(RouteError::UnknownWaypoint(id));
            }
        }
        let mut dist: BTreeMap<WaypointId, f64> = BTreeMap::from([(from, 0.0)]);
        let mut prev: BTreeMap<WaypointId, WaypointId> = BTreeMap::new();
        let mut settled = BTreeSet::new();
        let mut heap = BinaryHeap::from([Candidate { dist: 0.0, id: from }]);
        while let Some(Candidate { dist: d, id }) = heap.pop() {
            if !settled.insert(id) {
                continue;
            }
            if id == to {
                break;
            }
            for &(next, w) in self.edges_from(id) {
                if settled.contains(&next) {
                    continue;
                }
                let nd = d + w;
                if dist.get(&next).is_none_or(|&old| nd < old) {
                    dist.insert(next, nd);
                    prev.insert(next, id);
                    heap.push(Candidate { dist: nd, id: next });
                }
            }
        }
        let Some(&cost) = dist.get(&to).filter(|_| settled.contains(&to)) else {
            return Ok(None);
        };
        let mut waypoints = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[&cur];
            waypoints.push(cur);
        }
        waypoints.reverse();
        Ok(Some(Route { waypoints, cost }))
    }

    /// Positions of the given waypoints, in order.
    pub fn polyline(&self, waypoints: &[WaypointId]) -> Result<Vec<Vec2>, RouteError> {
        waypoints.iter().map(|&w| self.position(w)).collect()
    }
}

#[derive(Debug, PartialEq)]
struct Candidate {
    dist: f64,
    id: WaypointId,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Min-heap on (dist, id).
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
