use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cloud::{Point, PointCloud};
use crate::config::LidarConfig;
use crate::geometry::Pose;

use super::clock::Timestamp;

/// One LiDAR frame in the sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub points: PointCloud<f64>,
    pub timestamp: Timestamp,
    pub frame_index: u64,
}

/// Samples map points visible from a sensor pose.
///
/// Visibility is range and vertical field of view only (no occlusion).
/// Visible points are drawn uniformly without replacement up to
/// `points_per_scan`, moved into the sensor frame and perturbed along their
/// ray by Gaussian range noise.
#[derive(Debug, Clone)]
pub struct LidarSimulator<'a> {
    field: &'a PointCloud<f64>,
    config: LidarConfig,
    order: Vec<u32>,
}

impl<'a> LidarSimulator<'a> {
    pub fn new(field: &'a PointCloud<f64>, config: LidarConfig) -> Self {
        let order = (0..field.len() as u32).collect();
        Self {
            field,
            config,
            order,
        }
    }

    pub fn config(&self) -> &LidarConfig {
        &self.config
    }

    pub fn scan<R: Rng + ?Sized>(
        &mut self,
        pose: &Pose<f64>,
        frame_index: u64,
        timestamp: Timestamp,
        rng: &mut R,
    ) -> LidarScan {
        let cfg = &self.config;
        let to_sensor = pose.to_transform().inverse();
        let (sin_up, sin_down) = (
            cfg.fov_up_deg.to_radians().sin(),
            cfg.fov_down_deg.to_radians().sin(),
        );
        let noise = (cfg.range_noise > 0.0)
            .then(|| Normal::new(0.0, cfg.range_noise).expect("valid range noise"));
        let field = self.field.points();
        let n = self.order.len();
        let mut points = Vec::with_capacity(cfg.points_per_scan.min(n));
        let mut i = 0;
        while i < n && points.len() < cfg.points_per_scan {
            // partial Fisher-Yates: order[..i] holds the draws so far
            let j = rng.gen_range(i..n);
            self.order.swap(i, j);
            let src = &field[self.order[i] as usize];
            i += 1;
            let local = to_sensor.transform_point(&src.position);
            let range = local.norm();
            if range < cfg.min_range || range > cfg.max_range {
                continue;
            }
            let sin_elev = local.z / range;
            if sin_elev > sin_up || sin_elev < sin_down {
                continue;
            }
            if range > cfg.falloff_range && cfg.falloff_range > 0.0 {
                let keep = (cfg.falloff_range / range).powi(2);
                if rng.gen::<f64>() >= keep {
                    continue;
                }
            }
            let position = match &noise {
                Some(normal) => local * ((range + normal.sample(rng)) / range),
                None => local,
            };
            points.push(Point {
                position,
                intensity: src.intensity,
            });
        }
        LidarScan {
            points: PointCloud::new(points),
            timestamp,
            frame_index,
        }
    }
}

/// One-shot scan from a fresh simulator.
pub fn simulate_scan<R: Rng + ?Sized>(
    true_pose: &Pose<f64>,
    field: &PointCloud<f64>,
    config: &LidarConfig,
    frame_index: u64,
    timestamp: Timestamp,
    rng: &mut R,
) -> LidarScan {
    LidarSimulator::new(field, config.clone()).scan(true_pose, frame_index, timestamp, rng)
}
