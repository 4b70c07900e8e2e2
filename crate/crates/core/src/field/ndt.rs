use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geometry::Transform;
use crate::scalar::Real;

/// Absolute eigenvalue floor (m^2).
pub const MIN_EIGENVALUE: f64 = 1e-4;
/// Relative eigenvalue floor, as a fraction of the largest eigenvalue.
pub const RELATIVE_EIGENVALUE_FLOOR: f64 = 0.01;
pub const DEFAULT_MIN_POINTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("cell size must be positive and finite")]
    InvalidCellSize,
    #[error("no valid cells: no cell reaches the minimum occupancy of {min_points} points")]
    NoValidCells { min_points: usize },
}

/// Integer voxel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub [i64; 3]);

/// Gaussian summary of the map points inside one voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct NdtCell<T: Real> {
    mean: Vector3<T>,
    covariance: Matrix3<T>,
    information: Matrix3<T>,
    point_count: usize,
}

impl<T: Real> NdtCell<T> {
    pub fn mean(&self) -> &Vector3<T> {
        &self.mean
    }

    /// Regularized sample covariance.
    pub fn covariance(&self) -> &Matrix3<T> {
        &self.covariance
    }

    /// Inverse of the regularized covariance.
    pub fn information(&self) -> &Matrix3<T> {
        &self.information
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Builds a cell directly from a mean and covariance, applying the same
    /// eigenvalue floor as grid construction.
    pub fn from_moments(mean: Vector3<T>, covariance: Matrix3<T>, point_count: usize) -> Self {
        let (covariance, information) = regularize(covariance);
        Self {
            mean,
            covariance,
            information,
            point_count,
        }
    }

    fn transformed(&self, h: &Transform<T>) -> Self {
        let r = h.rotation_matrix();
        let covariance = symmetrize(r * self.covariance * r.transpose());
        let information = symmetrize(r * self.information * r.transpose());
        Self {
            mean: h.transform_point(&self.mean),
            covariance,
            information,
            point_count: self.point_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridParams<T: Real> {
    pub cell_size: T,
    /// Grid frame origin; cell `[0, 0, 0]` spans `origin .. origin + cell_size`.
    pub origin: Vector3<T>,
    pub min_points: usize,
}

impl<T: Real> GridParams<T> {
    pub fn new(cell_size: T) -> Self {
        Self {
            cell_size,
            origin: Vector3::zeros(),
            min_points: DEFAULT_MIN_POINTS,
        }
    }
}

/// Voxelized map with one Gaussian per occupied cell.
///
/// Cell membership is decided in the grid frame by floor division; means and
/// covariances are stored in the world frame.
#[derive(Debug, Clone)]
pub struct NdtGrid<T: Real> {
    cell_size: T,
    /// grid frame -> world
    frame: Transform<T>,
    /// world -> grid frame
    frame_inv: Transform<T>,
    cells: Vec<(CellIndex, NdtCell<T>)>,
    lookup: CellLookup,
    min_corner: Vector3<T>,
    max_corner: Vector3<T>,
    min_points: usize,
}

/// Builds a grid with the default origin and minimum occupancy.
pub fn build_ndt_grid<T: Real>(cloud: &PointCloud<T>, cell_size: T) -> Result<NdtGrid<T>, GridError> {
    NdtGrid::build(cloud, &GridParams::new(cell_size))
}

impl<T: Real> NdtGrid<T> {
    pub fn build(cloud: &PointCloud<T>, params: &GridParams<T>) -> Result<Self, GridError> {
        let size = params.cell_size;
        if !(size > T::zero() && size.is_finite()) {
            return Err(GridError::InvalidCellSize);
        }
        let frame = Transform::from_translation(params.origin);
        let frame_inv = frame.inverse();
        let mut buckets: BTreeMap<CellIndex, Vec<Vector3<T>>> = BTreeMap::new();
        for p in cloud.points() {
            let idx = index_in_grid(&frame_inv.transform_point(&p.position), size);
            buckets.entry(idx).or_default().push(p.position);
        }
        let mut cells = Vec::new();
        for (idx, mut members) in buckets {
            if members.len() < params.min_points.max(1) {
                continue;
            }
            // order-independent accumulation
            members.sort_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            });
            cells.push((idx, cell_from_points(&members)));
        }
        if cells.is_empty() {
            return Err(GridError::NoValidCells {
                min_points: params.min_points,
            });
        }
        Ok(Self::assemble(size, frame, cells, params.min_points))
    }

    fn assemble(
        cell_size: T,
        frame: Transform<T>,
        cells: Vec<(CellIndex, NdtCell<T>)>,
        min_points: usize,
    ) -> Self {
        let lookup = CellLookup::new(&cells);
        let mut min_corner = Vector3::repeat(T::max_value().unwrap());
        let mut max_corner = Vector3::repeat(T::min_value().unwrap());
        for (_, cell) in &cells {
            min_corner = min_corner.inf(&cell.mean);
            max_corner = max_corner.sup(&cell.mean);
        }
        Self {
            cell_size,
            frame_inv: frame.inverse(),
            frame,
            cells,
            lookup,
            min_corner,
            max_corner,
            min_points,
        }
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn frame(&self) -> &Transform<T> {
        &self.frame
    }

    pub fn min_points(&self) -> usize {
        self.min_points
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells in ascending index order.
    pub fn cells(&self) -> impl Iterator<Item = (&CellIndex, &NdtCell<T>)> {
        self.cells.iter().map(|(i, c)| (i, c))
    }

    pub fn total_points(&self) -> usize {
        self.cells.iter().map(|(_, c)| c.point_count).sum()
    }

    /// Bounding box of the cell means in the world frame.
    pub fn bounds(&self) -> (Vector3<T>, Vector3<T>) {
        (self.min_corner, self.max_corner)
    }

    pub fn index_of(&self, world_point: &Vector3<T>) -> CellIndex {
        index_in_grid(&self.frame_inv.transform_point(world_point), self.cell_size)
    }

    /// Grid-frame extent `[min, max)` of a cell.
    pub fn cell_extent(&self, idx: CellIndex) -> (Vector3<T>, Vector3<T>) {
        let min = Vector3::new(
            T::lit(idx.0[0] as f64),
            T::lit(idx.0[1] as f64),
            T::lit(idx.0[2] as f64),
        ) * self.cell_size;
        (min, min.add_scalar(self.cell_size))
    }

    pub fn get(&self, idx: CellIndex) -> Option<&NdtCell<T>> {
        self.lookup.get(idx).map(|i| &self.cells[i].1)
    }

    pub fn cell_at(&self, world_point: &Vector3<T>) -> Option<&NdtCell<T>> {
        self.get(self.index_of(world_point))
    }

    /// The same grid rigidly moved by `g` (cell membership moves with it).
    pub fn transformed(&self, g: &Transform<T>) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|(idx, c)| (*idx, c.transformed(g)))
            .collect();
        Self::assemble(self.cell_size, g.compose(&self.frame), cells, self.min_points)
    }
}

/// Dense slot table over the occupied index box when it is small enough,
/// otherwise a hash map.
#[derive(Debug, Clone)]
enum CellLookup {
    Dense {
        min: [i64; 3],
        dims: [i64; 3],
        slots: Vec<u32>,
    },
    Sparse(HashMap<CellIndex, usize>),
}

const MAX_DENSE_SLOTS: i64 = 1 << 24;

impl CellLookup {
    fn new<T: Real>(cells: &[(CellIndex, NdtCell<T>)]) -> Self {
        let mut min = [i64::MAX; 3];
        let mut max = [i64::MIN; 3];
        for (idx, _) in cells {
            for a in 0..3 {
                min[a] = min[a].min(idx.0[a]);
                max[a] = max[a].max(idx.0[a]);
            }
        }
        let dims = [0, 1, 2].map(|a| max[a].saturating_sub(min[a]).saturating_add(1));
        let volume = dims
            .iter()
            .try_fold(1i64, |acc, &d| acc.checked_mul(d))
            .filter(|&v| v > 0 && v <= MAX_DENSE_SLOTS && cells.len() < u32::MAX as usize);
        match volume {
            Some(volume) => {
                let mut slots = vec![u32::MAX; volume as usize];
                for (i, (idx, _)) in cells.iter().enumerate() {
                    let k = Self::offset(&min, &dims, idx).expect("inside box");
                    slots[k] = i as u32;
                }
                CellLookup::Dense { min, dims, slots }
            }
            None => CellLookup::Sparse(cells.iter().enumerate().map(|(i, (idx, _))| (*idx, i)).collect()),
        }
    }

    fn offset(min: &[i64; 3], dims: &[i64; 3], idx: &CellIndex) -> Option<usize> {
        let mut k = 0i64;
        for a in 0..3 {
            let d = idx.0[a].checked_sub(min[a])?;
            if d < 0 || d >= dims[a] {
                return None;
            }
            k = k * dims[a] + d;
        }
        Some(k as usize)
    }

    fn get(&self, idx: CellIndex) -> Option<usize> {
        match self {
            CellLookup::Dense { min, dims, slots } => {
                let slot = slots[Self::offset(min, dims, &idx)?];
                (slot != u32::MAX).then_some(slot as usize)
            }
            CellLookup::Sparse(map) => map.get(&idx).copied(),
        }
    }
}

fn index_in_grid<T: Real>(p: &Vector3<T>, size: T) -> CellIndex {
    let f = |v: T| (v / size).floor().as_f64() as i64;
    CellIndex([f(p.x), f(p.y), f(p.z)])
}

fn cell_from_points<T: Real>(points: &[Vector3<T>]) -> NdtCell<T> {
    let n = T::lit(points.len() as f64);
    let mean = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        scatter += d * d.transpose();
    }
    let covariance = if points.len() > 1 {
        scatter / (n - T::one())
    } else {
        Matrix3::zeros()
    };
    NdtCell::from_moments(mean, symmetrize(covariance), points.len())
}

/// Floors eigenvalues at `max(1e-4, 0.01 * lambda_max)`; returns the
/// regularized covariance and its inverse.
fn regularize<T: Real>(covariance: Matrix3<T>) -> (Matrix3<T>, Matrix3<T>) {
    let eig = SymmetricEigen::new(symmetrize(covariance));
    let largest = eig.eigenvalues.max();
    let floor = T::lit(MIN_EIGENVALUE).max(T::lit(RELATIVE_EIGENVALUE_FLOOR) * largest);
    let values = eig.eigenvalues.map(|l| l.max(floor));
    let v = eig.eigenvectors;
    let cov = v * Matrix3::from_diagonal(&values) * v.transpose();
    let info = v * Matrix3::from_diagonal(&values.map(|l| T::one() / l)) * v.transpose();
    (symmetrize(cov), symmetrize(info))
}

fn symmetrize<T: Real>(m: Matrix3<T>) -> Matrix3<T> {
    (m + m.transpose()) * T::lit(0.5)
}
