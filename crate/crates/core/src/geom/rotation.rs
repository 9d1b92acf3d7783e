use crate::error::{domain, Result};
use crate::geom::Vector3;
use crate::scalar::Real;

/// Tilt about the y axis that maps the vertical direction onto the spine
/// `(cos b, 0, sin b)` of a tilted Y cone.
///
/// ```text
///   [  sin b  0  cos b ]
///   [    0    1    0   ]
///   [ -cos b  0  sin b ]
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationY<T> {
    beta: T,
    matrix: [[T; 3]; 3],
}

impl<T: Real> RotationY<T> {
    /// Builds the tilt for `beta` in `[0, pi/2]`.
    pub fn new(beta: T) -> Result<Self> {
        if !(beta >= T::zero() && beta <= T::FRAC_PI_2()) {
            return domain(format!("beta = {beta} outside [0, pi/2]"));
        }
        Ok(Self::unchecked(beta))
    }

    pub(crate) fn unchecked(beta: T) -> Self {
        let (s, c) = beta.sin_cos();
        let (o, l) = (T::zero(), T::one());
        Self { beta, matrix: [[s, o, c], [o, l, o], [-c, o, s]] }
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn matrix(&self) -> [[T; 3]; 3] {
        self.matrix
    }

    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        let m = &self.matrix;
        Vector3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Image of the vertical axis, i.e. the spine direction.
    pub fn spine(&self) -> Vector3<T> {
        self.apply(&Vector3::unit_z())
    }

    pub fn determinant(&self) -> T {
        let m = &self.matrix;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Reflection through the `yz` plane.
pub fn reflect_x<T: Real>(v: &Vector3<T>) -> Vector3<T> {
    Vector3::new(-v.x, v.y, v.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn spine_at_reference_angles() {
        let r0 = RotationY::new(0.0).unwrap();
        assert!(r0.spine().max_abs_diff(&Vector3::new(1.0, 0.0, 0.0)) < 1e-16);
        let r90 = RotationY::new(FRAC_PI_2).unwrap();
        assert!(r90.spine().max_abs_diff(&Vector3::new(0.0, 0.0, 1.0)) < 1e-16);
        let r45 = RotationY::new(FRAC_PI_4).unwrap();
        let h = 0.5f64.sqrt();
        assert!(r45.spine().max_abs_diff(&Vector3::new(h, 0.0, h)) < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(RotationY::new(-1e-9).is_err());
        assert!(RotationY::new(FRAC_PI_2 + 1e-9).is_err());
        assert!(RotationY::new(f64::NAN).is_err());
    }

    #[test]
    fn orthogonal_with_unit_determinant() {
        for k in 0..=20 {
            let r = RotationY::new(FRAC_PI_2 * k as f64 / 20.0).unwrap();
            let m = r.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    let rtr: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((rtr - id).abs() < 1e-14);
                }
            }
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
