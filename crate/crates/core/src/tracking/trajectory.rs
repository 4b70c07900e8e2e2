use std::io::{BufRead, Write};

use thiserror::Error;

use crate::config::TrajectorySpec;
use crate::geometry::{GeometryError, Pose};

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;
const HEADER: &str = "# nightpair-trajectory v1";
const COLUMNS: &str = "# timestamp x y z roll yaw pitch velocity";

/// Maximum position gap between consecutive samples (m).
pub const MAX_SAMPLE_GAP: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory is empty")]
    Empty,
    #[error("timestamps must strictly increase (sample {index})")]
    NonIncreasing { index: usize },
    #[error("gap of {gap:.3} m between samples {index} and {} exceeds 1 m", index + 1)]
    GapTooLarge { index: usize, gap: f64 },
    #[error("negative or non-finite velocity at sample {index}")]
    BadVelocity { index: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub timestamp: f64,
    pub pose: Pose<f64>,
    pub velocity: f64,
}

/// Time sequence of poses and speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
    /// Cumulative planar arc length at each sample.
    arc: Vec<f64>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, TrajectoryError> {
        if samples.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        let mut arc = Vec::with_capacity(samples.len());
        arc.push(0.0);
        for (i, s) in samples.iter().enumerate() {
            if !(s.velocity >= 0.0 && s.velocity.is_finite()) {
                return Err(TrajectoryError::BadVelocity { index: i });
            }
            if i == 0 {
                continue;
            }
            let prev = &samples[i - 1];
            if !(s.timestamp > prev.timestamp) {
                return Err(TrajectoryError::NonIncreasing { index: i });
            }
            let gap = planar_distance(&prev.pose, &s.pose);
            if gap > MAX_SAMPLE_GAP {
                return Err(TrajectoryError::GapTooLarge { index: i - 1, gap });
            }
            arc.push(arc[i - 1] + gap);
        }
        Ok(Self { samples, arc })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn length(&self) -> f64 {
        self.arc[self.arc.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].timestamp - self.samples[0].timestamp
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose<f64>> {
        self.samples.iter().map(|s| &s.pose)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), TrajectoryError> {
        writeln!(out, "{HEADER}")?;
        writeln!(out, "{COLUMNS}")?;
        for s in &self.samples {
            let p = &s.pose;
            writeln!(
                out,
                "{:.9} {:.6} {:.6} {:.6} {:.9} {:.9} {:.9} {:.6}",
                s.timestamp,
                p.x(),
                p.y(),
                p.z(),
                p.roll(),
                p.yaw(),
                p.pitch(),
                s.velocity
            )?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, TrajectoryError> {
        let mut samples = Vec::new();
        let mut header_seen = false;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(comment) = text.strip_prefix('#') {
                if let Some(version) = comment.trim().strip_prefix("nightpair-trajectory v") {
                    if version.trim() != TRAJECTORY_FORMAT_VERSION.to_string() {
                        return Err(TrajectoryError::Parse {
                            line: i + 1,
                            message: format!("unsupported version {version}"),
                        });
                    }
                    header_seen = true;
                }
                continue;
            }
            if !header_seen {
                return Err(TrajectoryError::Parse {
                    line: i + 1,
                    message: "missing `# nightpair-trajectory v1` header".into(),
                });
            }
            let v: Vec<f64> = text
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| TrajectoryError::Parse {
                    line: i + 1,
                    message: format!("{e}"),
                })?;
            let [t, x, y, z, roll, yaw, pitch, vel] = v[..] else {
                return Err(TrajectoryError::Parse {
                    line: i + 1,
                    message: format!("expected 8 columns, found {}", v.len()),
                });
            };
            samples.push(TrajectorySample {
                timestamp: t,
                pose: Pose::new(x, y, z, roll, yaw, pitch)?,
                velocity: vel,
            });
        }
        Self::new(samples)
    }
}

pub(crate) fn planar_distance(a: &Pose<f64>, b: &Pose<f64>) -> f64 {
    (a.x() - b.x()).hypot(a.y() - b.y())
}

/// Builds the desired trajectory from a path spec: arc-length resampling,
/// cruise speed with a constant-deceleration ramp to zero at the end, and
/// timestamps from the speed profile. Poses are authored at height `z`.
pub fn author_trajectory(spec: &TrajectorySpec, z: f64) -> Result<Trajectory, TrajectoryError> {
    let path = spec.path.densify(spec.spacing);
    let total = path.last().map(|p| p.s).ok_or(TrajectoryError::Empty)?;
    let speed_at = |s: f64| spec.speed.min((2.0 * spec.end_decel * (total - s).max(0.0)).sqrt());
    let mut samples = Vec::with_capacity(path.len());
    let mut t = 0.0;
    for (i, p) in path.iter().enumerate() {
        let v = speed_at(p.s);
        if i > 0 {
            let prev = &path[i - 1];
            let mean = 0.5 * (speed_at(prev.s) + v);
            t += (p.s - prev.s) / mean.max(0.05 * spec.speed);
        }
        samples.push(TrajectorySample {
            timestamp: t,
            pose: Pose::planar(p.x, p.y, z, p.heading)?,
            velocity: v,
        });
    }
    Trajectory::new(samples)
}

/// Planar distance from each sample of `a` to the polyline through `b`.
pub fn trajectory_gap(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = b.poses().map(|p| (p.x(), p.y())).collect();
    a.poses()
        .map(|p| point_to_polyline(p.x(), p.y(), &pts))
        .collect()
}

pub(crate) fn point_to_polyline(x: f64, y: f64, pts: &[(f64, f64)]) -> f64 {
    if pts.len() == 1 {
        return (x - pts[0].0).hypot(y - pts[0].1);
    }
    pts.windows(2)
        .map(|w| point_to_segment(x, y, w[0], w[1]).0)
        .fold(f64::INFINITY, f64::min)
}

/// Distance to segment `ab` and the clamped parameter of the foot point.
pub(crate) fn point_to_segment(x: f64, y: f64, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let u = if len2 > 0.0 {
        (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((x - a.0 - u * dx).hypot(y - a.1 - u * dy), u)
}
