use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtd::dmcp::ConfigurationSet;
use vtd::geometry::{point_segment_distance, Pose, Segment, Vec2};
use vtd::sensor::{mounts_from_config, scan, ScannerMount};

fn forward(fov: f64, res: f64, range: f64) -> ScannerMount {
    ScannerMount {
        offset: Vec2::ZERO,
        height: 0.0,
        yaw: 0.0,
        fov,
        resolution: res,
        max_range: range,
    }
}

#[test]
fn wall_distances() {
    let wall = Segment::new(Vec2::new(10.0, -10.0), Vec2::new(10.0, 10.0), 2.0);
    let r = scan(&[wall], &Pose::default(), &forward(30.0, 15.0, 50.0));
    assert_eq!(r.len(), 3);
    for (reading, deg) in r.iter().zip([-15.0f64, 0.0, 15.0]) {
        let expected = 10.0 / deg.to_radians().cos();
        assert!(reading.valid);
        assert!((reading.angle - deg.to_radians()).abs() < 1e-15);
        assert!((reading.distance - expected).abs() < 1e-9, "{deg}: {}", reading.distance);
    }
    assert!((r[0].distance - 10.3528).abs() < 1e-4);
}

fn random_segment(rng: &mut ChaCha8Rng) -> Segment {
    let a = Vec2::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
    let b = a + Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
    Segment::new(a, b, rng.random_range(0.0..3.0))
}

fn random_mount(rng: &mut ChaCha8Rng) -> ScannerMount {
    ScannerMount {
        offset: Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)),
        height: rng.random_range(0.0..1.5),
        yaw: rng.random_range(-1.0..1.0),
        fov: rng.random_range(10.0..360.0),
        resolution: rng.random_range(0.5..5.0),
        max_range: rng.random_range(5.0..60.0),
    }
}

#[test]
fn occlusion_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let mut scene: Vec<Segment> = (0..rng.random_range(0..20)).map(|_| random_segment(&mut rng)).collect();
        let mount = random_mount(&mut rng);
        let pose = Pose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0));
        let before = scan(&scene, &pose, &mount);
        scene.push(random_segment(&mut rng));
        let after = scan(&scene, &pose, &mount);
        for (b, a) in before.iter().zip(&after) {
            assert!(a.distance <= b.distance);
            assert!(a.valid || !b.valid);
        }
    }
}

#[test]
fn valid_readings_lie_on_obstacles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let scene: Vec<Segment> = (0..15).map(|_| random_segment(&mut rng)).collect();
        let mount = random_mount(&mut rng);
        let pose = Pose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0));
        let sensor = mount.world_pose(&pose);
        for r in scan(&scene, &pose, &mount).iter().filter(|r| r.valid) {
            let local = Vec2::from_angle(r.angle) * r.distance;
            let world = sensor.transform_point(local);
            let d = scene
                .iter()
                .filter(|s| s.height >= mount.height)
                .map(|s| point_segment_distance(world, s.a, s.b))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "{d}");
        }
    }
}

proptest! {
    #[test]
    fn rigid_transform_equivariance(
        seed in any::<u64>(),
        tx in -100.0f64..100.0,
        ty in -100.0f64..100.0,
        rot in -3.14f64..3.14,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scene: Vec<Segment> = (0..12).map(|_| random_segment(&mut rng)).collect();
        let mount = random_mount(&mut rng);
        let pose = Pose::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0));
        let moved = Pose::new(tx, ty, rot);
        let scene2: Vec<Segment> = scene
            .iter()
            .map(|s| Segment::new(moved.transform_point(s.a), moved.transform_point(s.b), s.height))
            .collect();
        let pose2 = moved.compose(&pose);
        let a = scan(&scene, &pose, &mount);
        let b = scan(&scene2, &pose2, &mount);
        for (x, y) in a.iter().zip(&b) {
            // Grazing hits may flip validity at a segment end point.
            if x.valid == y.valid {
                prop_assert!((x.distance - y.distance).abs() < 1e-9, "{} vs {}", x.distance, y.distance);
            }
        }
        let flips = a.iter().zip(&b).filter(|(x, y)| x.valid != y.valid).count();
        prop_assert!(flips == 0, "{flips} readings changed validity");
    }
}

#[test]
fn three_scanner_layout() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/three-scanners.cfg");
    let cfg: ConfigurationSet = std::fs::read_to_string(path).unwrap().parse().unwrap();
    let mounts = mounts_from_config(&cfg).unwrap();
    assert_eq!(mounts.len(), 3);
    let look_ahead: Vec<f64> = mounts.iter().map(|(_, m)| m.offset.x).collect();
    assert_eq!(look_ahead, [8.0, 15.0, 1.5]);
    // A pedestrian-sized post 2 m left of the lane, 8 m ahead, shows up in
    // the 8 m scanner on its left half.
    let post = [
        Segment::new(Vec2::new(7.8, 2.0), Vec2::new(8.2, 2.0), 1.0),
        Segment::new(Vec2::new(8.2, 2.0), Vec2::new(8.2, 2.4), 1.0),
    ];
    let scans: Vec<_> = mounts.iter().map(|(_, m)| scan(&post, &Pose::default(), m)).collect();
    assert_eq!(scans.len(), 3);
    let hit = scans[0].iter().find(|r| r.valid && (r.angle - 90f64.to_radians()).abs() < 1e-9).unwrap();
    assert!((hit.distance - 2.0).abs() < 1e-9);
    assert!(scans[1].iter().all(|r| !r.valid));
}
