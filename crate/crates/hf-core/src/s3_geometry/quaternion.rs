//! Quaternion arithmetic for S^3 = unit quaternions.
//!
//! Convention: q = w + x*e1 + y*e2 + z*e3 with e1 e2 = e3 (Hamilton product).
//! The left-invariant frame is E_a(q) = q * e_a (tangent vector at q inside R^4).

use nalgebra::Matrix3;

/// Quaternion with components (w, x, y, z). Not constrained to unit norm:
/// tangent vectors and scaled intermediates reuse the same storage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Imaginary units as constant quaternions.
pub const E1: Quat = Quat { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
pub const E2: Quat = Quat { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
pub const E3: Quat = Quat { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };

// `mul`/`add` are deliberately inherent methods, not operator overloads:
// call sites stay explicit about quaternion algebra next to nalgebra types.
#[allow(clippy::should_implement_trait)]
impl Quat {
    pub const ONE: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Hamilton product self * rhs.
    pub fn mul(self, r: Quat) -> Quat {
        let q = self;
        Quat {
            w: q.w * r.w - q.x * r.x - q.y * r.y - q.z * r.z,
            x: q.w * r.x + q.x * r.w + q.y * r.z - q.z * r.y,
            y: q.w * r.y - q.x * r.z + q.y * r.w + q.z * r.x,
            z: q.w * r.z + q.x * r.y - q.y * r.x + q.z * r.w,
        }
    }

    pub fn conj(self) -> Quat {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scale(self, s: f64) -> Quat {
        Quat { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn add(self, r: Quat) -> Quat {
        Quat { w: self.w + r.w, x: self.x + r.x, y: self.y + r.y, z: self.z + r.z }
    }

    pub fn normalize(self) -> Quat {
        self.scale(1.0 / self.norm())
    }

    /// exp(angle * e_axis) for axis in 1..=3: rotation generator exponentials.
    pub fn exp_axis(axis: usize, angle: f64) -> Quat {
        let (c, s) = (angle.cos(), angle.sin());
        match axis {
            1 => Quat::new(c, s, 0.0, 0.0),
            2 => Quat::new(c, 0.0, s, 0.0),
            3 => Quat::new(c, 0.0, 0.0, s),
            _ => panic!("axis must be 1..=3"),
        }
    }

    /// Component by index: 0 -> w, 1 -> x, 2 -> y, 3 -> z.
    pub fn comp(self, c: usize) -> f64 {
        match c {
            0 => self.w,
            1 => self.x,
            2 => self.y,
            3 => self.z,
            _ => panic!("component must be 0..=3"),
        }
    }

    /// Integer power of a unit quaternion along its geodesic: q^k = exp(k log q).
    /// Slerp-consistent; q^0 = 1.
    pub fn powi(self, k: i64) -> Quat {
        let vn = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        let theta = vn.atan2(self.w);
        let kt = k as f64 * theta;
        if vn < 1e-300 {
            // at q = +-1 the axis is undefined and sin(k theta) = 0 anyway
            return Quat::new(kt.cos(), 0.0, 0.0, 0.0);
        }
        let s = kt.sin() / vn;
        Quat::new(kt.cos(), s * self.x, s * self.y, s * self.z)
    }

    /// Standard covering map: rotation matrix of the conjugation v -> q v q^-1
    /// on imaginary quaternions.
    pub fn rotation_matrix(self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamilton_table() {
        assert_eq!(E1.mul(E2), E3);
        assert_eq!(E2.mul(E3), E1);
        assert_eq!(E3.mul(E1), E2);
        assert_eq!(E1.mul(E1).w, -1.0);
    }

    #[test]
    fn power_matches_repeated_product() {
        let q = Quat::exp_axis(2, 0.3).mul(Quat::exp_axis(3, 0.7));
        let q3 = q.mul(q).mul(q);
        let p3 = q.powi(3);
        for c in 0..4 {
            assert!((q3.comp(c) - p3.comp(c)).abs() < 1e-14);
        }
        let pm1 = q.powi(-1);
        for c in 0..4 {
            assert!((pm1.comp(c) - q.conj().comp(c)).abs() < 1e-14);
        }
        assert_eq!(q.powi(0).w, 1.0);
    }

    #[test]
    fn rotation_of_quarter_turn() {
        // conjugation doubles the half-angle: exp((pi/4) e3) rotates by pi/2 about z
        let q = Quat::exp_axis(3, std::f64::consts::FRAC_PI_4);
        let r = q.rotation_matrix();
        let expect = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r - expect).norm() < 1e-14);
        // q and -q give the same rotation
        let rm = q.scale(-1.0).rotation_matrix();
        assert!((r - rm).norm() < 1e-15);
    }
}
