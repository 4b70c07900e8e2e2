//! NDT scan-to-map registration.
//!
//! The cost of a candidate transform `h` is the summed Mahalanobis distance
//! of every transformed scan point to the Gaussian of the grid cell it lands
//! in. Points landing in unoccupied cells add a fixed outlier penalty.
//!
//! The optimizer works on a body-frame increment `xi = (v, w)` (translation,
//! rotation vector) applied as `h * [Rot(w) | v]` and runs Gauss-Newton with
//! a backtracking line search.

use nalgebra::{Matrix3, Matrix6, Rotation3, Vector3, Vector6};
use thiserror::Error;
use tracing::debug;

use crate::cloud::PointCloud;
use crate::field::NdtGrid;
use crate::geometry::{htm_to_pose, pose_to_htm, Pose, Transform};
use crate::scalar::Real;
use crate::vehicle::LidarScan;

/// Penalty of a point that lands in an unoccupied cell (the 3-sigma level).
pub const OUTLIER_PENALTY: f64 = 9.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalizationError {
    #[error("NDT grid has no cells")]
    EmptyGrid,
    #[error(
        "registration did not converge after {iterations} iterations \
         (E = {error:.3}, matched fraction {matched_fraction:.3})"
    )]
    NotConverged {
        iterations: usize,
        error: f64,
        matched_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationParams<T: Real> {
    pub max_iterations: usize,
    /// Convergence threshold on the norm of the applied increment.
    pub tolerance: T,
    pub outlier_penalty: T,
}

impl<T: Real> Default for RegistrationParams<T> {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: T::lit(1e-6),
            outlier_penalty: T::lit(OUTLIER_PENALTY),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult<T: Real> {
    pub transform: Transform<T>,
    /// `E(h*)`.
    pub error: T,
    pub iterations: usize,
    pub converged: bool,
    /// Fraction of scan points inside occupied cells at `h*`.
    pub matched_fraction: T,
    /// `E` after each accepted iteration, starting with the initial guess.
    pub error_trace: Vec<T>,
    /// Norm of the last increment tried.
    pub last_step_norm: T,
}

/// Association error `E(h)` of a scan against the grid.
pub fn association_error<T: Real>(h: &Transform<T>, scan: &PointCloud<T>, grid: &NdtGrid<T>) -> T {
    association_error_with(h, scan, grid, T::lit(OUTLIER_PENALTY))
}

pub fn association_error_with<T: Real>(
    h: &Transform<T>,
    scan: &PointCloud<T>,
    grid: &NdtGrid<T>,
    penalty: T,
) -> T {
    let mut total = T::zero();
    for p in scan.points() {
        let q = h.transform_point(&p.position);
        total += match grid.cell_at(&q) {
            Some(cell) => {
                let r = q - cell.mean();
                r.dot(&(cell.information() * r))
            }
            None => penalty,
        };
    }
    total
}

struct Linearization<T: Real> {
    error: T,
    gradient: Vector6<T>,
    hessian: Matrix6<T>,
    matched: usize,
}

fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    )
}

fn linearize<T: Real>(
    h: &Transform<T>,
    scan: &PointCloud<T>,
    grid: &NdtGrid<T>,
    penalty: T,
) -> Linearization<T> {
    let rot = h.rotation_matrix();
    let two = T::lit(2.0);
    let mut out = Linearization {
        error: T::zero(),
        gradient: Vector6::zeros(),
        hessian: Matrix6::zeros(),
        matched: 0,
    };
    for p in scan.points() {
        let q = h.transform_point(&p.position);
        let Some(cell) = grid.cell_at(&q) else {
            out.error += penalty;
            continue;
        };
        out.matched += 1;
        let info = cell.information();
        let r = q - cell.mean();
        let info_r = info * r;
        out.error += r.dot(&info_r);
        // dq/dxi = [R | -R [c]x]
        let jt = rot;
        let jr = -(rot * skew(&p.position));
        let mut jac = nalgebra::Matrix3x6::zeros();
        jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&jt);
        jac.fixed_view_mut::<3, 3>(0, 3).copy_from(&jr);
        out.gradient += jac.transpose() * info_r * two;
        out.hessian += jac.transpose() * info * jac * two;
    }
    out
}

/// `E(h)` and its gradient with respect to the body-frame increment
/// `xi = (v, w)` at zero.
pub fn association_error_gradient<T: Real>(
    h: &Transform<T>,
    scan: &PointCloud<T>,
    grid: &NdtGrid<T>,
) -> (T, Vector6<T>) {
    let lin = linearize(h, scan, grid, T::lit(OUTLIER_PENALTY));
    (lin.error, lin.gradient)
}

/// Applies a body-frame increment: `h * [Rot(w) | v]`.
pub fn retract<T: Real>(h: &Transform<T>, xi: &Vector6<T>) -> Transform<T> {
    let v = Vector3::new(xi[0], xi[1], xi[2]);
    let w = Vector3::new(xi[3], xi[4], xi[5]);
    h.compose(&Transform::from_parts(&Rotation3::new(w), &v))
}

/// Minimizes `E(h)` starting from `initial`.
pub fn register_scan<T: Real>(
    scan: &PointCloud<T>,
    grid: &NdtGrid<T>,
    initial: &Transform<T>,
    params: &RegistrationParams<T>,
) -> Result<RegistrationResult<T>, LocalizationError> {
    if grid.is_empty() {
        return Err(LocalizationError::EmptyGrid);
    }
    let n = scan.len();
    let mut h = *initial;
    let mut lin = linearize(&h, scan, grid, params.outlier_penalty);
    let mut trace = vec![lin.error];
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = T::zero();

    if lin.matched > 0 {
        while iterations < params.max_iterations {
            iterations += 1;
            let Some(step) = solve_step(&lin.hessian, &lin.gradient) else {
                break;
            };
            let full = step.norm();
            if !full.is_finite() {
                break;
            }
            if full < params.tolerance {
                last_step = full;
                converged = true;
                break;
            }
            let mut alpha = T::one();
            let mut accepted = None;
            while alpha * full >= params.tolerance {
                let candidate = retract(&h, &(step * alpha));
                let e = association_error_with(&candidate, scan, grid, params.outlier_penalty);
                if e <= lin.error {
                    accepted = Some(candidate);
                    break;
                }
                alpha *= T::lit(0.5);
            }
            last_step = alpha * full;
            match accepted {
                Some(candidate) => {
                    h = candidate;
                    lin = linearize(&h, scan, grid, params.outlier_penalty);
                    trace.push(lin.error);
                    debug!(
                        iteration = iterations,
                        error = lin.error.as_f64(),
                        step = last_step.as_f64(),
                        "ndt iteration"
                    );
                }
                None => {
                    // no descent above the tolerance: stationary
                    converged = true;
                    break;
                }
            }
        }
    }

    let matched_fraction = if n == 0 {
        T::zero()
    } else {
        T::lit(lin.matched as f64 / n as f64)
    };
    Ok(RegistrationResult {
        transform: h,
        error: lin.error,
        iterations,
        converged,
        matched_fraction,
        error_trace: trace,
        last_step_norm: last_step,
    })
}

fn solve_step<T: Real>(hessian: &Matrix6<T>, gradient: &Vector6<T>) -> Option<Vector6<T>> {
    if let Some(chol) = hessian.cholesky() {
        return Some(-chol.solve(gradient));
    }
    // rank-deficient (e.g. ground-only overlap): damp lightly
    let damping = hessian.trace() * T::lit(1e-9) + T::lit(1e-12);
    let damped = hessian + Matrix6::identity() * damping;
    damped.cholesky().map(|c| -c.solve(gradient))
}

/// Registers one LiDAR frame seeded at `prev_pose` and returns the map-frame
/// vehicle pose. Non-convergence is reported as an error.
pub fn localize_frame(
    scan: &LidarScan,
    grid: &NdtGrid<f64>,
    prev_pose: &Pose<f64>,
    params: &RegistrationParams<f64>,
) -> Result<Pose<f64>, LocalizationError> {
    let result = register_scan(&scan.points, grid, &pose_to_htm(prev_pose), params)?;
    if !result.converged {
        return Err(LocalizationError::NotConverged {
            iterations: result.iterations,
            error: result.error,
            matched_fraction: result.matched_fraction,
        });
    }
    Ok(htm_to_pose(&result.transform))
}
