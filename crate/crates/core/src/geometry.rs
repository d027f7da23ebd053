//! Small fixed-size vector types used throughout the solver.
//!
//! Positions and directions are real [`Vec3`] in millimetres; field and
//! current phasors are complex [`CVec3`].

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex zero, used often enough to deserve a name.
pub const CZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction; `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 1e-300 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_complex(self) -> CVec3 {
        CVec3::new(
            Complex64::new(self.x, 0.0),
            Complex64::new(self.y, 0.0),
            Complex64::new(self.z, 0.0),
        )
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Complex 3-vector. `dot` is the bilinear (non-conjugating) product used by
/// reaction integrals; `hdot` conjugates the left operand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl CVec3 {
    pub const ZERO: CVec3 = CVec3::new(CZERO, CZERO, CZERO);

    pub const fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: CVec3) -> Complex64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn dot_real(self, v: Vec3) -> Complex64 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    pub fn hdot(self, o: CVec3) -> Complex64 {
        self.x.conj() * o.x + self.y.conj() * o.y + self.z.conj() * o.z
    }

    #[inline]
    pub fn cross(self, o: CVec3) -> CVec3 {
        CVec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// `self × v` for a real right operand.
    #[inline]
    pub fn cross_real(self, v: Vec3) -> CVec3 {
        CVec3::new(
            self.y * v.z - self.z * v.y,
            self.z * v.x - self.x * v.z,
            self.x * v.y - self.y * v.x,
        )
    }

    pub fn conj(self) -> CVec3 {
        CVec3::new(self.x.conj(), self.y.conj(), self.z.conj())
    }

    pub fn re(self) -> Vec3 {
        Vec3::new(self.x.re, self.y.re, self.z.re)
    }

    pub fn im(self) -> Vec3 {
        Vec3::new(self.x.im, self.y.im, self.z.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: Complex64) -> CVec3 {
        CVec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// `v × c` for a real left operand.
#[inline]
pub fn real_cross(v: Vec3, c: CVec3) -> CVec3 {
    CVec3::new(
        c.z * v.y - c.y * v.z,
        c.x * v.z - c.z * v.x,
        c.y * v.x - c.x * v.y,
    )
}

impl Add for CVec3 {
    type Output = CVec3;
    #[inline]
    fn add(self, o: CVec3) -> CVec3 {
        CVec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for CVec3 {
    #[inline]
    fn add_assign(&mut self, o: CVec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for CVec3 {
    type Output = CVec3;
    #[inline]
    fn sub(self, o: CVec3) -> CVec3 {
        CVec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for CVec3 {
    fn sub_assign(&mut self, o: CVec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Neg for CVec3 {
    type Output = CVec3;
    fn neg(self) -> CVec3 {
        CVec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Complex64> for CVec3 {
    type Output = CVec3;
    #[inline]
    fn mul(self, s: Complex64) -> CVec3 {
        self.scale(s)
    }
}

impl Mul<f64> for CVec3 {
    type Output = CVec3;
    #[inline]
    fn mul(self, s: f64) -> CVec3 {
        CVec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Complex64> for Vec3 {
    type Output = CVec3;
    #[inline]
    fn mul(self, s: Complex64) -> CVec3 {
        CVec3::new(s * self.x, s * self.y, s * self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_products_agree() {
        let a = Vec3::new(1.0, -2.0, 0.5);
        let b = Vec3::new(0.3, 4.0, -1.0);
        let c = CVec3::new(
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 3.0),
        );
        let lhs = real_cross(a, c);
        let rhs = a.to_complex().cross(c);
        assert!((lhs - rhs).norm() < 1e-15);
        let lhs = c.cross_real(b);
        let rhs = c.cross(b.to_complex());
        assert!((lhs - rhs).norm() < 1e-15);
        assert!((a.cross(b).dot(a)).abs() < 1e-12);
    }
}
