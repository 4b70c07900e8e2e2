//! Point clouds of `[X, Y, Z, I]` points and their ASCII XYZI form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::Vector3;
use thiserror::Error;

use crate::geometry::Transform;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("point cloud is empty")]
    Empty,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("line {line}: expected 4 numbers `X Y Z I`")]
    Parse { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One LiDAR or map point: position in meters, reflectance in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T: Real> {
    pub position: Vector3<T>,
    pub intensity: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T, z: T, intensity: T) -> Self {
        Self {
            position: Vector3::new(x, y, z),
            intensity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<T: Real> {
    points: Vec<Point<T>>,
}

impl<T: Real> PointCloud<T> {
    /// Wraps a point list. Empty clouds are allowed here (an empty scan is a
    /// valid simulation outcome); use [`PointCloud::validate`] where at least
    /// one point is required.
    pub fn new(points: Vec<Point<T>>) -> Self {
        Self { points }
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        if self.points.is_empty() {
            return Err(CloudError::Empty);
        }
        if let Some(index) = self
            .points
            .iter()
            .position(|p| !p.position.iter().all(|v| v.is_finite()))
        {
            return Err(CloudError::NonFinite { index });
        }
        Ok(())
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: Point<T>) {
        self.points.push(point);
    }

    pub fn extend_from(&mut self, other: &PointCloud<T>) {
        self.points.extend_from_slice(&other.points);
    }

    pub fn into_points(self) -> Vec<Point<T>> {
        self.points
    }

    pub fn transformed(&self, h: &Transform<T>) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| Point {
                    position: h.transform_point(&p.position),
                    intensity: p.intensity,
                })
                .collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| Point {
                    position: p.position.map(|v| U::lit(v.as_f64())),
                    intensity: U::lit(p.intensity.as_f64()),
                })
                .collect(),
        }
    }

    /// Writes one `X Y Z I` row per point with 6 decimal places.
    pub fn write_xyzi<W: Write>(&self, mut out: W) -> Result<(), CloudError> {
        let mut line = String::new();
        for p in &self.points {
            line.clear();
            writeln!(
                line,
                "{:.6} {:.6} {:.6} {:.6}",
                p.position.x.as_f64(),
                p.position.y.as_f64(),
                p.position.z.as_f64(),
                p.intensity.as_f64()
            )
            .expect("write to String");
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Reads rows written by [`PointCloud::write_xyzi`]. Blank lines and
    /// `#` comments are skipped.
    pub fn read_xyzi<R: BufRead>(input: R) -> Result<Self, CloudError> {
        let mut points = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| CloudError::Parse { line: i + 1 })?;
            let [x, y, z, intensity] = values[..] else {
                return Err(CloudError::Parse { line: i + 1 });
            };
            points.push(Point::new(T::lit(x), T::lit(y), T::lit(z), T::lit(intensity)));
        }
        let cloud = Self { points };
        cloud.validate()?;
        Ok(cloud)
    }
}
