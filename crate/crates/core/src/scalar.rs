//! Scalar abstraction shared by the geometry, map and registration code.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the pose and NDT math: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Tolerance used when validating orthonormality of rotation blocks.
    fn orthonormal_tolerance() -> Self;

    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {
    fn orthonormal_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn orthonormal_tolerance() -> Self {
        1e-9
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::two_pi();
    let pi = T::pi();
    let mut a = angle % two_pi;
    if a > pi {
        a -= two_pi;
    } else if a <= -pi {
        a += two_pi;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0_f64), 0.0);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5_f64) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(7.0_f32) - (7.0 - 2.0 * std::f32::consts::PI)).abs() < 1e-5);
    }
}
