//! Synthetic single-layer laser scans by 2D ray casting.
//!
//! Rays start at the mount position in the world frame and sweep
//! `[-fov/2, +fov/2]` around `vehicle heading + mount yaw`. A segment is
//! visible to a scanner when its height reaches the mounting height.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dmcp::{ConfigError, ConfigurationSet};
use crate::geometry::{Pose, Segment, Vec2};
use crate::messages::{type_id, Message};
use crate::serialization::{DecodeError, PayloadReader, PayloadWriter};

/// Tolerance for `fov / resolution` landing just below an integer.
const COUNT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MountError {
    #[error("scanner {index}: {reason}")]
    Invalid { index: u32, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScannerMount {
    /// Position in the vehicle frame, meters.
    pub offset: Vec2,
    /// Mounting height above ground, meters.
    pub height: f64,
    /// Yaw in the vehicle frame, radians.
    pub yaw: f64,
    /// Field of view, degrees.
    pub fov: f64,
    /// Angle between neighboring rays, degrees.
    pub resolution: f64,
    pub max_range: f64,
}

impl ScannerMount {
    pub fn check(&self) -> Result<(), String> {
        let finite = [self.offset.x, self.offset.y, self.height, self.yaw, self.fov, self.resolution, self.max_range]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err("non-finite parameter".into());
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return Err(format!("fov {} outside (0, 360]", self.fov));
        }
        if !(self.resolution > 0.0 && self.resolution <= self.fov) {
            return Err(format!("resolution {} outside (0, fov]", self.resolution));
        }
        if self.max_range <= 0.0 {
            return Err(format!("maxrange {} not positive", self.max_range));
        }
        Ok(())
    }

    pub fn ray_count(&self) -> usize {
        (self.fov / self.resolution + COUNT_EPS).floor() as usize + 1
    }

    /// Ray angles in the scanner frame, radians, ascending.
    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.ray_count()).map(|i| (-self.fov / 2.0 + i as f64 * self.resolution).to_radians())
    }

    /// Scanner pose in the world frame.
    pub fn world_pose(&self, vehicle: &Pose) -> Pose {
        vehicle.compose(&Pose {
            position: self.offset,
            heading: self.yaw,
        })
    }

    /// Reads `scanner.<index>.{x,y,height,yaw,fov,resolution,maxrange}`.
    /// Position, height and yaw default to 0.
    pub fn from_config(cfg: &ConfigurationSet, index: u32) -> Result<Self, MountError> {
        let key = |k: &str| format!("scanner.{index}.{k}");
        let m = Self {
            offset: Vec2::new(cfg.get_or(&key("x"), 0.0)?, cfg.get_or(&key("y"), 0.0)?),
            height: cfg.get_or(&key("height"), 0.0)?,
            yaw: cfg.get_or(&key("yaw"), 0.0)?,
            fov: cfg.require(&key("fov"))?,
            resolution: cfg.require(&key("resolution"))?,
            max_range: cfg.require(&key("maxrange"))?,
        };
        m.check().map_err(|reason| MountError::Invalid { index, reason })?;
        Ok(m)
    }
}

/// Every `scanner.<n>.*` mount in the configuration, ordered by index.
pub fn mounts_from_config(cfg: &ConfigurationSet) -> Result<Vec<(u32, ScannerMount)>, MountError> {
    let indices: BTreeSet<u32> = cfg
        .with_prefix("scanner")
        .filter_map(|(k, _)| k.split('.').next()?.parse().ok())
        .collect();
    indices
        .into_iter()
        .map(|i| Ok((i, ScannerMount::from_config(cfg, i)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    /// Scanner frame, radians.
    pub angle: f64,
    pub distance: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub vehicle_id: u32,
    pub scanner: u32,
    pub timestamp: i64,
    pub readings: Vec<Reading>,
}

/// Distance along the unit ray `origin + t * dir` to segment `s`.
pub fn ray_segment(origin: Vec2, dir: Vec2, s: &Segment) -> Option<f64> {
    let e = s.b - s.a;
    let denom = dir.cross(e);
    if denom == 0.0 {
        return None;
    }
    let ao = s.a - origin;
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Noise-free sweep. Readings carry `valid == false` and `distance ==
/// max_range` when nothing is hit within range.
pub fn scan(obstacles: &[Segment], vehicle: &Pose, mount: &ScannerMount) -> Vec<Reading> {
    let pose = mount.world_pose(vehicle);
    let visible: Vec<&Segment> = obstacles
        .iter()
        .filter(|s| s.height >= mount.height && s.a != s.b)
        .collect();
    mount
        .angles()
        .map(|angle| {
            let dir = Vec2::from_angle(pose.heading + angle);
            let nearest = visible
                .iter()
                .filter_map(|s| ray_segment(pose.position, dir, s))
                .filter(|&t| t <= mount.max_range)
                .min_by(f64::total_cmp);
            match nearest {
                Some(distance) => Reading {
                    angle,
                    distance,
                    valid: true,
                },
                None => Reading {
                    angle,
                    distance: mount.max_range,
                    valid: false,
                },
            }
        })
        .collect()
}

/// Adds zero-mean Gaussian noise of deviation `sigma` to valid readings,
/// clamped to `[0, max_range]`.
pub fn add_noise(readings: &mut [Reading], sigma: f64, max_range: f64, rng: &mut impl Rng) {
    let Ok(normal) = Normal::new(0.0, sigma) else {
        return;
    };
    if sigma <= 0.0 {
        return;
    }
    for r in readings.iter_mut().filter(|r| r.valid) {
        r.distance = (r.distance + normal.sample(rng)).clamp(0.0, max_range);
    }
}

impl Message for ScanResult {
    const TYPE_ID: u32 = type_id::SCAN_RESULT;

    fn write(&self, w: &mut PayloadWriter) {
        let angles: Vec<f64> = self.readings.iter().map(|r| r.angle).collect();
        let distances: Vec<f64> = self.readings.iter().map(|r| r.distance).collect();
        let valid: Vec<bool> = self.readings.iter().map(|r| r.valid).collect();
        w.put("vehicleId", &self.vehicle_id)
            .put("scanner", &self.scanner)
            .put("timestamp", &self.timestamp)
            .put_list("angles", &angles)
            .put_list("distances", &distances)
            .put_list("valid", &valid);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        let angles: Vec<f64> = r.list("angles")?.unwrap_or_default();
        let distances: Vec<f64> = r.list("distances")?.unwrap_or_default();
        let valid: Vec<bool> = r.list("valid")?.unwrap_or_default();
        if angles.len() != distances.len() || angles.len() != valid.len() {
            return Err(DecodeError::Malformed {
                offset: 0,
                reason: "reading lists differ in length".into(),
            });
        }
        Ok(Self {
            vehicle_id: r.require("vehicleId")?,
            scanner: r.get_or("scanner", 0)?,
            timestamp: r.require("timestamp")?,
            readings: angles
                .into_iter()
                .zip(distances)
                .zip(valid)
                .map(|((angle, distance), valid)| Reading { angle, distance, valid })
                .collect(),
        })
    }
}
