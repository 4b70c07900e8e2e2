use crate::config::ControlConfig;
use crate::geometry::{position_distance, Pose};
use crate::scalar::wrap_angle;

use super::run::TrackingError;
use super::trajectory::{point_to_segment, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitParams {
    /// Lookahead time gain (s): `L = clamp(gain * v, min, max)`.
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    pub off_trajectory_distance: f64,
}

impl Default for PursuitParams {
    fn default() -> Self {
        Self::from(&ControlConfig::default())
    }
}

impl From<&ControlConfig> for PursuitParams {
    fn from(c: &ControlConfig) -> Self {
        Self {
            lookahead_gain: c.lookahead_gain,
            lookahead_min: c.lookahead_min,
            lookahead_max: c.lookahead_max,
            off_trajectory_distance: c.off_trajectory_distance,
        }
    }
}

impl PursuitParams {
    pub fn lookahead(&self, speed: f64) -> f64 {
        (self.lookahead_gain * speed).clamp(self.lookahead_min, self.lookahead_max)
    }
}

/// Output of one planning step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPlan {
    /// Pose of the lookahead point on the desired trajectory.
    pub target: Pose<f64>,
    /// Recorded speed at the lookahead point, never negative.
    pub target_velocity: f64,
    /// Pursuit curvature toward the lookahead point.
    pub curvature: f64,
    /// Bearing of the lookahead point relative to the vehicle heading.
    pub alpha: f64,
    /// Straight-line distance to the lookahead point; `curvature * distance = 2 sin(alpha)`.
    pub lookahead_distance: f64,
    pub nearest_index: usize,
    pub nearest_distance: f64,
    /// Arc length of the vehicle's projection onto the trajectory.
    pub progress: f64,
    /// The lookahead point was clamped to the final sample.
    pub at_end: bool,
}

/// Pure pursuit step: nearest sample, lookahead point `L` meters of arc
/// further along the trajectory, curvature `2 sin(alpha) / d`.
pub fn pure_pursuit_plan(
    pose: &Pose<f64>,
    speed: f64,
    trajectory: &Trajectory,
    params: &PursuitParams,
) -> Result<MotionPlan, TrackingError> {
    let samples = trajectory.samples();
    let (nearest_index, nearest_distance) = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (i, position_distance(pose, &s.pose)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if nearest_distance > params.off_trajectory_distance {
        return Err(TrackingError::OffTrajectory {
            distance: nearest_distance,
        });
    }

    let arc = trajectory.arc_lengths();
    let total = trajectory.length();
    let progress = project(pose, trajectory, nearest_index);
    let lookahead = params.lookahead(speed);
    let goal_s = progress + lookahead;
    let at_end = goal_s >= total;
    let (target, target_velocity) = if at_end || samples.len() == 1 {
        let last = samples[samples.len() - 1];
        (last.pose, last.velocity)
    } else {
        let i = arc.partition_point(|&s| s <= goal_s).clamp(1, samples.len() - 1);
        let (a, b) = (&samples[i - 1], &samples[i]);
        let span = arc[i] - arc[i - 1];
        let u = if span > 0.0 { ((goal_s - arc[i - 1]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let lerp = |p: f64, q: f64| p + u * (q - p);
        let yaw = a.pose.yaw() + u * wrap_angle(b.pose.yaw() - a.pose.yaw());
        let pose = Pose::planar(
            lerp(a.pose.x(), b.pose.x()),
            lerp(a.pose.y(), b.pose.y()),
            lerp(a.pose.z(), b.pose.z()),
            yaw,
        )
        .expect("finite interpolation");
        (pose, lerp(a.velocity, b.velocity))
    };

    let (dx, dy) = (target.x() - pose.x(), target.y() - pose.y());
    let (sin_h, cos_h) = pose.yaw().sin_cos();
    let (lx, ly) = (cos_h * dx + sin_h * dy, -sin_h * dx + cos_h * dy);
    let distance = lx.hypot(ly);
    let (alpha, curvature) = if distance > 1e-9 {
        let alpha = ly.atan2(lx);
        (alpha, 2.0 * alpha.sin() / distance)
    } else {
        (0.0, 0.0)
    };
    Ok(MotionPlan {
        target,
        target_velocity: target_velocity.max(0.0),
        curvature,
        alpha,
        lookahead_distance: distance,
        nearest_index,
        nearest_distance,
        progress,
        at_end,
    })
}

/// Arc length of the foot point on the segments adjacent to sample `i`.
fn project(pose: &Pose<f64>, trajectory: &Trajectory, i: usize) -> f64 {
    let samples = trajectory.samples();
    let arc = trajectory.arc_lengths();
    let xy = |k: usize| (samples[k].pose.x(), samples[k].pose.y());
    let mut best = (f64::INFINITY, arc[i]);
    for k in [i.checked_sub(1), Some(i)].into_iter().flatten() {
        if k + 1 >= samples.len() {
            continue;
        }
        let (d, u) = point_to_segment(pose.x(), pose.y(), xy(k), xy(k + 1));
        if d < best.0 {
            best = (d, arc[k] + u * (arc[k + 1] - arc[k]));
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrajectorySpec;
    use crate::path::{PathSpec, Segment};
    use crate::tracking::trajectory::author_trajectory;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn course(segments: Vec<Segment>) -> Trajectory {
        author_trajectory(
            &TrajectorySpec {
                path: PathSpec {
                    start: Some([0.0, 0.0, 0.0]),
                    segments,
                    ..Default::default()
                },
                speed: 4.0,
                spacing: 0.25,
                end_decel: 1.0,
                duration_s: None,
            },
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn aligned_on_straight_line() {
        let t = course(vec![Segment::Straight { length: 50.0 }]);
        let pose = Pose::planar(10.0, 0.0, 0.0, 0.0).unwrap();
        let plan = pure_pursuit_plan(&pose, 4.0, &t, &PursuitParams::default()).unwrap();
        assert_eq!(plan.alpha, 0.0);
        assert_eq!(plan.curvature, 0.0);
        assert_eq!(plan.target_velocity, 4.0);
        assert!((plan.target.x() - 16.0).abs() < 1e-9);
        assert!((plan.progress - 10.0).abs() < 1e-12);
    }

    #[test]
    fn circle_curvature_within_two_percent() {
        for radius in [10.0, 25.0, 50.0] {
            let t = course(vec![Segment::Arc {
                radius,
                angle_deg: 300.0,
            }]);
            // vehicle on the circle, tangent, a quarter of the way round
            let theta: f64 = 1.0;
            let pose = Pose::planar(radius * theta.sin(), radius * (1.0 - theta.cos()), 0.0, theta).unwrap();
            let plan = pure_pursuit_plan(&pose, 1.0, &t, &PursuitParams::default()).unwrap();
            let rel = (plan.curvature * radius - 1.0).abs();
            assert!(rel < 0.02, "R {radius}: {rel}");
            assert!((plan.curvature * plan.lookahead_distance - 2.0 * plan.alpha.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_sample_matches_exhaustive_search() {
        let t = course(vec![
            Segment::Straight { length: 10.0 },
            Segment::Arc {
                radius: 12.0,
                angle_deg: 120.0,
            },
            Segment::Straight { length: 10.0 },
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let k = rng.gen_range(0..t.len());
            let base = t.samples()[k].pose;
            let pose = Pose::planar(
                base.x() + rng.gen_range(-2.0..2.0),
                base.y() + rng.gen_range(-2.0..2.0),
                0.0,
                rng.gen_range(-3.0..3.0),
            )
            .unwrap();
            let plan = pure_pursuit_plan(&pose, 3.0, &t, &PursuitParams::default()).unwrap();
            let mut best = (0, f64::INFINITY);
            for (i, s) in t.samples().iter().enumerate() {
                let d = ((s.pose.x() - pose.x()).powi(2) + (s.pose.y() - pose.y()).powi(2)).sqrt();
                if d < best.1 {
                    best = (i, d);
                }
            }
            assert_eq!(plan.nearest_index, best.0);
            assert!((plan.curvature * plan.lookahead_distance - 2.0 * plan.alpha.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn off_trajectory_boundary() {
        let t = course(vec![Segment::Straight { length: 20.0 }]);
        let params = PursuitParams::default();
        // nearest sample is (10, 0): distance exactly 5 is still on track
        let on = Pose::planar(10.0, 5.0, 0.0, 0.0).unwrap();
        assert!(pure_pursuit_plan(&on, 1.0, &t, &params).is_ok());
        let off = Pose::planar(10.0, 5.0 + 1e-9, 0.0, 0.0).unwrap();
        assert!(matches!(
            pure_pursuit_plan(&off, 1.0, &t, &params),
            Err(TrackingError::OffTrajectory { .. })
        ));
    }

    #[test]
    fn lookahead_is_speed_scaled_and_clamped() {
        let p = PursuitParams::default();
        assert_eq!(p.lookahead(0.0), 2.0);
        assert_eq!(p.lookahead(4.0), 6.0);
        assert_eq!(p.lookahead(20.0), 8.0);
    }

    #[test]
    fn goal_beyond_end_clamps_to_last_sample() {
        let t = course(vec![Segment::Straight { length: 5.0 }]);
        let pose = Pose::planar(4.0, 0.0, 0.0, 0.0).unwrap();
        let plan = pure_pursuit_plan(&pose, 4.0, &t, &PursuitParams::default()).unwrap();
        assert!(plan.at_end);
        assert_eq!(plan.target_velocity, 0.0);
        assert!((plan.target.x() - 5.0).abs() < 1e-12);
    }
}
