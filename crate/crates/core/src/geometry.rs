//! Rigid-body pose math: 6-DoF poses, homogeneous transforms and pose distances.
//!
//! Euler convention: the rotation of a [`Pose`] is the intrinsic Z-Y'-X''
//! sequence, i.e. `R = Rz(yaw) * Ry(pitch) * Rx(roll)`. Points are mapped
//! from the pose's local frame into the parent frame by `p = R * c + t`.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use thiserror::Error;

use crate::scalar::{wrap_angle, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("pose component `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("rotation block is not orthonormal (residual {residual:e})")]
    NotOrthonormal { residual: f64 },
    #[error("rotation block has determinant {det}, expected +1")]
    Reflection { det: f64 },
    #[error("bottom row must be exactly [0, 0, 0, 1]")]
    BadBottomRow,
}

/// Vehicle or sensor pose `[x, y, z, roll, yaw, pitch]`.
///
/// Positions are meters, angles radians. Angles are always stored wrapped
/// into (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    x: T,
    y: T,
    z: T,
    roll: T,
    yaw: T,
    pitch: T,
}

impl<T: Real> Pose<T> {
    /// Builds a pose, wrapping the angles. Fails on non-finite input.
    pub fn new(x: T, y: T, z: T, roll: T, yaw: T, pitch: T) -> Result<Self, GeometryError> {
        for (name, v) in [
            ("x", x),
            ("y", y),
            ("z", z),
            ("roll", roll),
            ("yaw", yaw),
            ("pitch", pitch),
        ] {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite(name));
            }
        }
        Ok(Self {
            x,
            y,
            z,
            roll: wrap_angle(roll),
            yaw: wrap_angle(yaw),
            pitch: wrap_angle(pitch),
        })
    }

    /// Planar pose at height `z` with the given heading.
    pub fn planar(x: T, y: T, z: T, yaw: T) -> Result<Self, GeometryError> {
        Self::new(x, y, z, T::zero(), yaw, T::zero())
    }

    pub fn identity() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
            roll: T::zero(),
            yaw: T::zero(),
            pitch: T::zero(),
        }
    }

    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn z(&self) -> T {
        self.z
    }
    pub fn roll(&self) -> T {
        self.roll
    }
    pub fn yaw(&self) -> T {
        self.yaw
    }
    pub fn pitch(&self) -> T {
        self.pitch
    }

    pub fn position(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Components in storage order `[x, y, z, roll, yaw, pitch]`.
    pub fn to_array(&self) -> [T; 6] {
        [self.x, self.y, self.z, self.roll, self.yaw, self.pitch]
    }

    pub fn rotation(&self) -> Rotation3<T> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw)
            * Rotation3::from_axis_angle(&Vector3::y_axis(), self.pitch)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), self.roll)
    }

    pub fn to_transform(&self) -> Transform<T> {
        pose_to_htm(self)
    }

    /// Lossy conversion between scalar types.
    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose {
            x: U::lit(self.x.as_f64()),
            y: U::lit(self.y.as_f64()),
            z: U::lit(self.z.as_f64()),
            roll: U::lit(self.roll.as_f64()),
            yaw: U::lit(self.yaw.as_f64()),
            pitch: U::lit(self.pitch.as_f64()),
        }
    }
}

/// Rigid transform held as a 4x4 homogeneous matrix.
///
/// The rotation block is orthonormal with determinant +1 and the bottom row is
/// exactly `[0, 0, 0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform<T: Real> {
    matrix: Matrix4<T>,
}

impl<T: Real> Transform<T> {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix4::identity(),
        }
    }

    pub fn from_parts(rotation: &Rotation3<T>, translation: &Vector3<T>) -> Self {
        let mut matrix = Matrix4::identity();
        matrix
            .fixed_view_mut::<3, 3>(0, 0)
            .copy_from(rotation.matrix());
        matrix.fixed_view_mut::<3, 1>(0, 3).copy_from(translation);
        Self { matrix }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self::from_parts(&Rotation3::identity(), &translation)
    }

    /// Validates and wraps a raw matrix.
    pub fn from_matrix(matrix: Matrix4<T>) -> Result<Self, GeometryError> {
        let bottom = matrix.fixed_view::<1, 4>(3, 0);
        if bottom[0] != T::zero()
            || bottom[1] != T::zero()
            || bottom[2] != T::zero()
            || bottom[3] != T::one()
        {
            return Err(GeometryError::BadBottomRow);
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("matrix"));
        }
        let r: Matrix3<T> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let residual = (r.transpose() * r - Matrix3::identity()).norm();
        if residual > T::orthonormal_tolerance() {
            return Err(GeometryError::NotOrthonormal {
                residual: residual.as_f64(),
            });
        }
        let det = r.determinant();
        if (det - T::one()).abs() > T::orthonormal_tolerance() {
            return Err(GeometryError::Reflection { det: det.as_f64() });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Matrix4<T> {
        &self.matrix
    }

    pub fn rotation_matrix(&self) -> Matrix3<T> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<T> {
        self.matrix.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        compose(self, other)
    }

    pub fn inverse(&self) -> Self {
        invert(self)
    }

    pub fn transform_point(&self, point: &Vector3<T>) -> Vector3<T> {
        self.matrix.fixed_view::<3, 3>(0, 0) * point + self.matrix.fixed_view::<3, 1>(0, 3)
    }

    pub fn to_pose(&self) -> Pose<T> {
        htm_to_pose(self)
    }

    pub fn cast<U: Real>(&self) -> Transform<U> {
        Transform {
            matrix: self.matrix.map(|v| U::lit(v.as_f64())),
        }
    }
}

/// Homogeneous transform of a pose (intrinsic Z-Y-X Euler angles).
pub fn pose_to_htm<T: Real>(pose: &Pose<T>) -> Transform<T> {
    Transform::from_parts(&pose.rotation(), &pose.position())
}

/// Recovers `[x, y, z, roll, yaw, pitch]` from a transform.
///
/// At gimbal lock (`|pitch| = pi/2`) roll is fixed to zero and the whole
/// heading is attributed to yaw.
pub fn htm_to_pose<T: Real>(h: &Transform<T>) -> Pose<T> {
    let r = h.rotation_matrix();
    let t = h.translation();
    let cos_pitch = (r[(0, 0)] * r[(0, 0)] + r[(1, 0)] * r[(1, 0)]).sqrt();
    let pitch = (-r[(2, 0)]).atan2(cos_pitch);
    let (roll, yaw) = if cos_pitch > T::lit(1e-10) {
        (r[(2, 1)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(0, 0)]))
    } else {
        (T::zero(), (-r[(0, 1)]).atan2(r[(1, 1)]))
    };
    Pose {
        x: t.x,
        y: t.y,
        z: t.z,
        roll: wrap_angle(roll),
        yaw: wrap_angle(yaw),
        pitch: wrap_angle(pitch),
    }
}

pub fn compose<T: Real>(a: &Transform<T>, b: &Transform<T>) -> Transform<T> {
    let mut matrix = a.matrix * b.matrix;
    // keep the bottom row exact
    matrix[(3, 0)] = T::zero();
    matrix[(3, 1)] = T::zero();
    matrix[(3, 2)] = T::zero();
    matrix[(3, 3)] = T::one();
    Transform { matrix }
}

pub fn invert<T: Real>(h: &Transform<T>) -> Transform<T> {
    let rt = h.rotation_matrix().transpose();
    let t = -(rt * h.translation());
    let mut matrix = Matrix4::identity();
    matrix.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
    matrix.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    Transform { matrix }
}

/// Euclidean distance between the positions of two poses, in meters.
pub fn position_distance<T: Real>(a: &Pose<T>, b: &Pose<T>) -> T {
    (a.position() - b.position()).norm()
}

/// Geodesic angle of the relative rotation between two poses, in [0, pi].
pub fn angular_distance<T: Real>(a: &Pose<T>, b: &Pose<T>) -> T {
    rotation_angle(&(a.rotation().matrix().transpose() * b.rotation().matrix()))
}

/// Rotation angle of a rotation matrix, well conditioned near 0 and pi.
pub(crate) fn rotation_angle<T: Real>(r: &Matrix3<T>) -> T {
    let half = T::lit(0.5);
    let cos = (r.trace() - T::one()) * half;
    let sin = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    )
    .norm()
        * half;
    sin.atan2(cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose<f64> {
        Pose::new(
            rng.gen_range(-50.0..50.0),
            rng.gen_range(-50.0..50.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-PI..PI),
            rng.gen_range(-PI..PI),
            rng.gen_range(-(FRAC_PI_2 - 0.01)..(FRAC_PI_2 - 0.01)),
        )
        .unwrap()
    }

    fn max_abs_diff(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
        (a - b).abs().max()
    }

    fn pose_residual(a: &Pose<f64>, b: &Pose<f64>) -> f64 {
        a.to_array()
            .iter()
            .zip(b.to_array())
            .enumerate()
            .map(|(i, (p, q))| {
                if i < 3 {
                    (p - q).abs()
                } else {
                    wrap_angle(p - q).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_pose_is_identity() {
        let h = pose_to_htm(&Pose::<f64>::identity());
        assert_eq!(*h.matrix(), Matrix4::identity());
    }

    #[test]
    fn quarter_turn_yaw_maps_x_to_y() {
        let p = Pose::new(0.0, 0.0, 0.0, 0.0, FRAC_PI_2, 0.0).unwrap();
        let q = pose_to_htm(&p).transform_point(&Vector3::new(1.0, 0.0, 0.0));
        assert!((q - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn documented_pose_round_trips() {
        let p = Pose::new(1.0, 2.0, 0.5, 0.1, 0.2, 0.3).unwrap();
        let back = htm_to_pose(&pose_to_htm(&p));
        assert!(pose_residual(&p, &back) < 1e-12);
    }

    #[test]
    fn euler_order_is_z_y_x() {
        let p = Pose::new(0.0, 0.0, 0.0, 0.3, -0.7, 0.2).unwrap();
        let expected = Rotation3::from_euler_angles(0.3, 0.2, -0.7);
        assert!((p.rotation().matrix() - expected.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn identity_and_translation_to_pose() {
        assert_eq!(htm_to_pose(&Transform::<f64>::identity()), Pose::identity());
        let p = htm_to_pose(&Transform::from_translation(Vector3::new(3.0, -1.0, 0.2)));
        assert_eq!(p.to_array(), [3.0, -1.0, 0.2, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_transforms_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let axis = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let angle = rng.gen_range(-PI..PI);
            let rot = Rotation3::from_scaled_axis(axis.normalize() * angle);
            let t = Vector3::new(
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
            );
            let h = Transform::from_parts(&rot, &t);
            let back = pose_to_htm(&htm_to_pose(&h));
            assert!(max_abs_diff(h.matrix(), back.matrix()) < 1e-9);
        }
    }

    #[test]
    fn thousand_random_poses_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let p = random_pose(&mut rng);
            let back = htm_to_pose(&pose_to_htm(&p));
            assert!(pose_residual(&p, &back) < 1e-9, "{p:?} vs {back:?}");
        }
    }

    #[test]
    fn gimbal_lock_fixes_roll() {
        let p = Pose::new(0.0, 0.0, 0.0, 0.4, 0.9, FRAC_PI_2).unwrap();
        let h = pose_to_htm(&p);
        let back = htm_to_pose(&h);
        assert_eq!(back.roll(), 0.0);
        assert!((back.pitch() - FRAC_PI_2).abs() < 1e-7);
        assert!(max_abs_diff(h.matrix(), pose_to_htm(&back).matrix()) < 1e-9);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = Matrix4::<f64>::identity();
        m[(0, 0)] = 1.01;
        assert!(matches!(
            Transform::from_matrix(m),
            Err(GeometryError::NotOrthonormal { .. })
        ));
        let mut m = Matrix4::<f64>::identity();
        m[(0, 0)] = -1.0;
        assert!(matches!(
            Transform::from_matrix(m),
            Err(GeometryError::Reflection { .. })
        ));
        let mut m = Matrix4::<f64>::identity();
        m[(3, 0)] = 1e-3;
        assert_eq!(Transform::from_matrix(m), Err(GeometryError::BadBottomRow));
        assert!(Pose::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn compose_and_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let id = Transform::<f64>::identity();
        for _ in 0..100 {
            let a = random_pose(&mut rng).to_transform();
            let b = random_pose(&mut rng).to_transform();
            let c = random_pose(&mut rng).to_transform();
            assert_eq!(compose(&id, &a), a);
            assert!(max_abs_diff(compose(&a, &invert(&a)).matrix(), id.matrix()) < 1e-9);
            let left = compose(&compose(&a, &b), &c);
            let right = compose(&a, &compose(&b, &c));
            assert!(max_abs_diff(left.matrix(), right.matrix()) < 1e-9);
        }
        let t = Transform::from_translation(Vector3::new(1.5, -2.0, 0.25));
        assert_eq!(
            invert(&t).translation(),
            Vector3::new(-1.5, 2.0, -0.25)
        );
        assert_eq!(invert(&t).rotation_matrix(), Matrix3::identity());
    }

    #[test]
    fn composition_chain_stays_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut h = Transform::<f64>::identity();
        for _ in 0..1000 {
            h = compose(&h, &random_pose(&mut rng).to_transform());
        }
        let r = h.rotation_matrix();
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-7);
        assert!(Transform::from_matrix(*h.matrix()).is_ok());
    }

    #[test]
    fn distances() {
        let a = Pose::<f64>::new(1.0, 2.0, 0.0, 0.0, 0.3, 0.0).unwrap();
        assert_eq!(position_distance(&a, &a), 0.0);
        assert!(angular_distance(&a, &a).abs() < 1e-15);
        let b = Pose::new(1.03, 2.04, 0.0, 0.0, 0.3, 0.0).unwrap();
        assert!((position_distance(&a, &b) - 0.05).abs() < 1e-12);
        let c = Pose::new(1.0, 2.0, 0.0, 0.0, 0.32, 0.0).unwrap();
        assert_eq!(position_distance(&a, &c), 0.0);
        assert!((angular_distance(&a, &c) - 0.02).abs() < 1e-12);
        // shortest arc across the wrap
        let d = Pose::new(0.0, 0.0, 0.0, 0.0, PI - 0.01, 0.0).unwrap();
        let e = Pose::new(0.0, 0.0, 0.0, 0.0, -PI + 0.01, 0.0).unwrap();
        assert!((angular_distance(&d, &e) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn triangle_inequality_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..500 {
            let (a, b, c) = (
                random_pose(&mut rng),
                random_pose(&mut rng),
                random_pose(&mut rng),
            );
            let ab = position_distance(&a, &b);
            assert!(ab <= position_distance(&a, &c) + position_distance(&c, &b) + 1e-12);
            assert_eq!(ab, position_distance(&b, &a));
            assert!((angular_distance(&a, &b) - angular_distance(&b, &a)).abs() < 1e-12);
            assert!(angular_distance(&a, &b) >= 0.0);
        }
    }

    #[test]
    fn f32_pose_math() {
        let p = Pose::<f32>::new(1.0, 2.0, 0.5, 0.1, 0.2, 0.3).unwrap();
        let back = htm_to_pose(&pose_to_htm(&p));
        for (a, b) in p.to_array().iter().zip(back.to_array()) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!(Transform::from_matrix(*pose_to_htm(&p).matrix()).is_ok());
    }
}
