use std::f64::consts::TAU;

use super::model::{GroundShape, Scenario};
use crate::geometry::{Pose, Segment, Vec2};

/// Number of facets used for a cylinder's outline.
pub const CYLINDER_FACETS: usize = 16;

/// Current footprint of a dynamic object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub object_id: u32,
    pub pose: Pose,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Footprint {
    /// Corners counter-clockwise starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        [
            Vec2::new(hl, hw),
            Vec2::new(-hl, hw),
            Vec2::new(-hl, -hw),
            Vec2::new(hl, -hw),
        ]
        .map(|c| self.pose.transform_point(c))
    }

    pub fn segments(&self) -> [Segment; 4] {
        let c = self.corners();
        std::array::from_fn(|i| Segment::new(c[i], c[(i + 1) % 4], self.height))
    }
}

fn ring(points: &[Vec2], height: f64, out: &mut Vec<Segment>) {
    let n = points.len();
    if n < 2 {
        return;
    }
    for i in 0..n {
        out.push(Segment::new(points[i], points[(i + 1) % n], height));
    }
}

/// Static obstacles: polygon rings and tessellated cylinders. Lane
/// markings are not obstacles.
pub fn ground_segments(scenario: &Scenario) -> Vec<Segment> {
    let mut out = Vec::new();
    for g in &scenario.ground {
        match g {
            GroundShape::Polygon { height, vertices, .. } => ring(vertices, *height, &mut out),
            GroundShape::Cylinder {
                center, radius, height, ..
            } => {
                let pts: Vec<Vec2> = (0..CYLINDER_FACETS)
                    .map(|k| *center + Vec2::from_angle(TAU * k as f64 / CYLINDER_FACETS as f64) * *radius)
                    .collect();
                ring(&pts, *height, &mut out);
            }
        }
    }
    out
}

/// Static obstacles plus every dynamic object's footprint.
pub fn extract_obstacles(scenario: &Scenario, objects: &[Footprint]) -> Vec<Segment> {
    let mut out = ground_segments(scenario);
    for f in objects {
        out.extend(f.segments());
    }
    out
}
