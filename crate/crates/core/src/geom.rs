//! Small fixed-size vector and matrix types for planar geometry.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    /// Rotation by -90 degrees.
    #[inline]
    pub fn perp_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn component(self, axis: usize) -> f64 {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix. For gradients of vector fields `m[i][j] = d w_i / d x_j`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[1.0, 0.0], [0.0, 1.0]] };
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.m[0][0] * v.x + self.m[0][1] * v.y, self.m[1][0] * v.x + self.m[1][1] * v.y)
    }

    #[inline]
    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (self.m[0][0].abs() + self.m[0][1].abs()).max(self.m[1][0].abs() + self.m[1][1].abs())
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.m[0][0] + o.m[0][0], self.m[0][1] + o.m[0][1], self.m[1][0] + o.m[1][0], self.m[1][1] + o.m[1][1])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Axis-aligned square `[min.x, min.x + side] x [min.y, min.y + side]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub min: Vec2,
    pub side: f64,
}

impl Square {
    pub fn new(min: Vec2, side: f64) -> Self {
        Square { min, side }
    }

    pub fn max(&self) -> Vec2 {
        self.min + Vec2::new(self.side, self.side)
    }

    pub fn center(&self) -> Vec2 {
        self.min + Vec2::new(0.5 * self.side, 0.5 * self.side)
    }

    /// Closed containment with absolute slack `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let max = self.max();
        p.x >= self.min.x - tol && p.x <= max.x + tol && p.y >= self.min.y - tol && p.y <= max.y + tol
    }

    /// Position along the boundary, counter-clockwise from the lower-left
    /// corner, in `[0, 4 side)`. Uses the nearest edge for points slightly off
    /// the boundary.
    pub fn perimeter_coord(&self, p: Vec2) -> f64 {
        let s = self.side;
        let max = self.max();
        let d = [(p.y - self.min.y).abs(), (p.x - max.x).abs(), (p.y - max.y).abs(), (p.x - self.min.x).abs()];
        let mut e = 0;
        for i in 1..4 {
            if d[i] < d[e] {
                e = i;
            }
        }
        let clamp = |v: f64| v.clamp(0.0, s);
        let sigma = match e {
            0 => clamp(p.x - self.min.x),
            1 => s + clamp(p.y - self.min.y),
            2 => 2.0 * s + clamp(max.x - p.x),
            _ => 3.0 * s + clamp(max.y - p.y),
        };
        if sigma >= 4.0 * s {
            0.0
        } else {
            sigma
        }
    }

    /// Inverse of [`Square::perimeter_coord`].
    pub fn perimeter_point(&self, sigma: f64) -> Vec2 {
        let s = self.side;
        let sigma = sigma.rem_euclid(4.0 * s);
        let max = self.max();
        if sigma < s {
            Vec2::new(self.min.x + sigma, self.min.y)
        } else if sigma < 2.0 * s {
            Vec2::new(max.x, self.min.y + (sigma - s))
        } else if sigma < 3.0 * s {
            Vec2::new(max.x - (sigma - 2.0 * s), max.y)
        } else {
            Vec2::new(self.min.x, max.y - (sigma - 3.0 * s))
        }
    }

    pub fn corner(&self, i: usize) -> Vec2 {
        self.perimeter_point(i as f64 * self.side)
    }

    pub fn children(&self) -> [Square; 4] {
        let s = 0.5 * self.side;
        [
            Square::new(self.min, s),
            Square::new(self.min + Vec2::new(s, 0.0), s),
            Square::new(self.min + Vec2::new(0.0, s), s),
            Square::new(self.min + Vec2::new(s, s), s),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perimeter_coord_roundtrip() {
        let sq = Square::new(Vec2::new(1.0, -2.0), 0.5);
        for i in 0..40 {
            let sigma = i as f64 * 0.05;
            let p = sq.perimeter_point(sigma);
            assert!((sq.perimeter_coord(p) - sigma).abs() < 1e-14, "{sigma}");
        }
    }

    #[test]
    fn mat_inverse() {
        let a = Mat2::new(2.0, 1.0, -1.0, 3.0);
        let p = a * a.inverse().unwrap();
        assert!((p.m[0][0] - 1.0).abs() < 1e-15 && p.m[0][1].abs() < 1e-15);
        assert!(Mat2::ZERO.inverse().is_none());
    }
}
