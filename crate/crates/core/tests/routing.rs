use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtd::geometry::Vec2;
use vtd::scenario::{RouteError, RouteGraph, WaypointId};

fn wp(n: u32) -> WaypointId {
    WaypointId::new(1, 1, 1, n)
}

fn graph(n: u32, edges: &[(u32, u32, f64)]) -> RouteGraph {
    let mut g = RouteGraph::new();
    for i in 1..=n {
        g.add_node(wp(i), Vec2::new(i as f64, 0.0));
    }
    for &(a, b, w) in edges {
        g.add_edge(wp(a), wp(b), w).unwrap();
    }
    g
}

/// Every simple path from `from` to `to`, cheapest first.
fn enumerate(n: u32, edges: &[(u32, u32, f64)], from: u32, to: u32) -> Option<(Vec<u32>, f64)> {
    fn dfs(
        at: u32,
        to: u32,
        edges: &[(u32, u32, f64)],
        path: &mut Vec<u32>,
        cost: f64,
        best: &mut Option<(Vec<u32>, f64)>,
    ) {
        if at == to {
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                *best = Some((path.clone(), cost));
            }
            return;
        }
        for &(a, b, w) in edges {
            if a == at && !path.contains(&b) {
                path.push(b);
                dfs(b, to, edges, path, cost + w, best);
                path.pop();
            }
        }
    }
    let _ = n;
    let mut best = None;
    dfs(from, to, edges, &mut vec![from], 0.0, &mut best);
    best
}

fn bellman_ford(n: u32, edges: &[(u32, u32, f64)], from: u32, to: u32) -> Option<(Vec<u32>, f64)> {
    let mut dist = vec![f64::INFINITY; n as usize + 1];
    let mut prev = vec![0u32; n as usize + 1];
    dist[from as usize] = 0.0;
    for _ in 1..n {
        for &(a, b, w) in edges {
            if dist[a as usize] + w < dist[b as usize] {
                dist[b as usize] = dist[a as usize] + w;
                prev[b as usize] = a;
            }
        }
    }
    if dist[to as usize].is_infinite() {
        return None;
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap() as usize]);
    }
    path.reverse();
    Some((path, dist[to as usize]))
}

fn random_edges(rng: &mut ChaCha8Rng, n: u32, density: f64) -> Vec<(u32, u32, f64)> {
    let mut edges = Vec::new();
    for a in 1..=n {
        for b in 1..=n {
            if a != b && rng.random_bool(density) {
                edges.push((a, b, rng.random_range(0.1..10.0)));
            }
        }
    }
    edges
}

fn check(g: &RouteGraph, from: u32, to: u32, expected: Option<(Vec<u32>, f64)>) {
    let got = g.shortest_route(wp(from), wp(to)).unwrap();
    match (got, expected) {
        (None, None) => {}
        (Some(r), Some((path, cost))) => {
            let ids: Vec<u32> = r.waypoints.iter().map(|w| w.point()).collect();
            assert_eq!(ids, path);
            assert!((r.cost - cost).abs() < 1e-9, "{} vs {}", r.cost, cost);
        }
        (got, expected) => panic!("{from}->{to}: got {got:?}, expected {expected:?}"),
    }
}

// A=1, B=2, C=3, D=4
const DIAMOND: [(u32, u32, f64); 5] = [(1, 2, 3.0), (1, 3, 1.0), (3, 2, 1.0), (2, 4, 1.0), (3, 4, 5.0)];

#[test]
fn diamond() {
    let g = graph(4, &DIAMOND);
    let r = g.shortest_route(wp(1), wp(4)).unwrap().unwrap();
    assert_eq!(r.waypoints, vec![wp(1), wp(3), wp(2), wp(4)]);
    assert_eq!(r.cost, 3.0);
    assert_eq!(enumerate(4, &DIAMOND, 1, 4), Some((vec![1, 3, 2, 4], 3.0)));
}

#[test]
fn same_endpoints() {
    let g = graph(4, &DIAMOND);
    let r = g.shortest_route(wp(2), wp(2)).unwrap().unwrap();
    assert_eq!(r.waypoints, vec![wp(2)]);
    assert_eq!(r.cost, 0.0);
}

#[test]
fn no_route() {
    let g = graph(4, &DIAMOND);
    assert_eq!(g.shortest_route(wp(4), wp(1)).unwrap(), None);
}

#[test]
fn unknown_waypoint() {
    let g = graph(2, &[(1, 2, 1.0)]);
    assert_eq!(
        g.shortest_route(wp(1), wp(7)).unwrap_err(),
        RouteError::UnknownWaypoint(wp(7))
    );
}

#[test]
fn rejects_bad_weights() {
    let mut g = graph(2, &[]);
    assert!(g.add_edge(wp(1), wp(2), 0.0).is_err());
    assert!(g.add_edge(wp(1), wp(2), f64::NAN).is_err());
}

#[test]
fn equal_cost_tie_prefers_lower_id() {
    // 1 -> {2, 3} -> 4, both branches cost 2.
    for edges in [
        vec![(1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0)],
        vec![(1, 3, 1.0), (3, 4, 1.0), (1, 2, 1.0), (2, 4, 1.0)],
    ] {
        let g = graph(4, &edges);
        let r = g.shortest_route(wp(1), wp(4)).unwrap().unwrap();
        assert_eq!(r.waypoints, vec![wp(1), wp(2), wp(4)]);
    }
}

#[test]
fn matches_enumeration_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let edges = random_edges(&mut rng, n, 0.3);
        let g = graph(n, &edges);
        for from in 1..=n {
            let to = rng.random_range(1..=n);
            check(&g, from, to, enumerate(n, &edges, from, to));
        }
    }
    check(&graph(4, &DIAMOND), 1, 4, enumerate(4, &DIAMOND, 1, 4));
}

#[test]
fn matches_bellman_ford_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let edges = random_edges(&mut rng, n, (3.0 / n as f64).min(0.5));
        let g = graph(n, &edges);
        let (from, to) = (rng.random_range(1..=n), rng.random_range(1..=n));
        check(&g, from, to, bellman_ford(n, &edges, from, to));
    }
}
