//! Built-in velocity fields with analytic gradients.

use crate::flowmap::VelocityField;
use crate::geom::{Mat2, Vec2};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl VelocityField for ZeroField {
    fn eval(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::ZERO
    }
    fn grad(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::ZERO
    }
    fn exact_flow(&self, x: Vec2, _t0: f64, _t1: f64) -> Option<Vec2> {
        Some(x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub Vec2);

impl VelocityField for ConstantField {
    fn eval(&self, _x: Vec2, _t: f64) -> Vec2 {
        self.0
    }
    fn grad(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::ZERO
    }
    fn exact_flow(&self, x: Vec2, t0: f64, t1: f64) -> Option<Vec2> {
        Some(x + self.0 * (t1 - t0))
    }
}

/// Rigid rotation `omega * (-(y - cy), x - cx)`.
#[derive(Clone, Copy, Debug)]
pub struct RotationField {
    pub omega: f64,
    pub center: Vec2,
}

impl RotationField {
    pub fn unit() -> Self {
        RotationField { omega: 1.0, center: Vec2::ZERO }
    }

    /// Exact flow: position at time `t + dt` of the particle at `x` at time `t`.
    pub fn rotate(&self, x: Vec2, dt: f64) -> Vec2 {
        let (s, c) = (self.omega * dt).sin_cos();
        let r = x - self.center;
        self.center + Vec2::new(c * r.x - s * r.y, s * r.x + c * r.y)
    }
}

impl VelocityField for RotationField {
    fn eval(&self, x: Vec2, _t: f64) -> Vec2 {
        let r = x - self.center;
        Vec2::new(-self.omega * r.y, self.omega * r.x)
    }
    fn grad(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::new(0.0, -self.omega, self.omega, 0.0)
    }
    fn div(&self, _x: Vec2, _t: f64) -> f64 {
        0.0
    }
    fn exact_flow(&self, x: Vec2, t0: f64, t1: f64) -> Option<Vec2> {
        Some(self.rotate(x, t1 - t0))
    }
}

/// Affine field `A x + b`; compressible unless `trace(A) = 0`.
#[derive(Clone, Copy, Debug)]
pub struct AffineField {
    pub a: Mat2,
    pub b: Vec2,
}

impl VelocityField for AffineField {
    fn eval(&self, x: Vec2, _t: f64) -> Vec2 {
        self.a.mul_vec(x) + self.b
    }
    fn grad(&self, _x: Vec2, _t: f64) -> Mat2 {
        self.a
    }
}

/// Time-decaying cellular vortex
/// `cos(pi t / 4) (sin^2(pi x) sin(2 pi y), -sin^2(pi y) sin(2 pi x))`,
/// which stretches the unit disk into a snake-like shape. Divergence free:
/// the two diagonal gradient entries are the same product with opposite sign.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeformingVortex;

impl VelocityField for DeformingVortex {
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        let c = (PI * t / 4.0).cos();
        let sx = (PI * x.x).sin();
        let sy = (PI * x.y).sin();
        Vec2::new(c * sx * sx * (2.0 * PI * x.y).sin(), -c * sy * sy * (2.0 * PI * x.x).sin())
    }

    fn grad(&self, x: Vec2, t: f64) -> Mat2 {
        let c = (PI * t / 4.0).cos();
        let sx = (PI * x.x).sin();
        let sy = (PI * x.y).sin();
        let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x.y).sin_cos();
        let diag = c * PI * s2x * s2y;
        Mat2::new(diag, c * sx * sx * 2.0 * PI * c2y, -c * sy * sy * 2.0 * PI * c2x, -diag)
    }

    fn div(&self, _x: Vec2, _t: f64) -> f64 {
        0.0
    }

    fn eval_with_grad(&self, x: Vec2, t: f64) -> (Vec2, Mat2) {
        let c = (PI * t / 4.0).cos();
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let (s2x, c2x) = (2.0 * sx * cx, 1.0 - 2.0 * sx * sx);
        let (s2y, c2y) = (2.0 * sy * cy, 1.0 - 2.0 * sy * sy);
        let (ax, ay) = (c * sx * sx, c * sy * sy);
        let diag = c * PI * s2x * s2y;
        (Vec2::new(ax * s2y, -ay * s2x), Mat2::new(diag, ax * 2.0 * PI * c2y, -ay * 2.0 * PI * c2x, -diag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowmap::fd_gradient;

    #[test]
    fn combined_evaluation_matches_separate_calls() {
        let f = DeformingVortex;
        for &(x, t) in &[(Vec2::new(0.31, -0.77), 0.4), (Vec2::new(-1.2, 0.55), 1.3), (Vec2::new(0.0, 0.5), 2.0)] {
            let (v, g) = f.eval_with_grad(x, t);
            assert!((v - f.eval(x, t)).norm() < 1e-14);
            let d = g + f.grad(x, t).scale(-1.0);
            assert!(d.norm_inf() < 1e-13);
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let fields: Vec<Box<dyn VelocityField + Send>> = vec![
            Box::new(DeformingVortex),
            Box::new(RotationField { omega: 2.0, center: Vec2::new(0.1, -0.2) }),
            Box::new(AffineField { a: Mat2::new(-0.5, 1.0, 0.3, -0.2), b: Vec2::new(0.1, 0.0) }),
        ];
        for f in &fields {
            for &(x, t) in &[(Vec2::new(0.31, -0.77), 0.4), (Vec2::new(-0.12, 0.55), 1.3)] {
                let g = f.grad(x, t);
                let fd = fd_gradient(f, x, t);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((g.m[i][j] - fd.m[i][j]).abs() <= 1e-6 * g.norm_inf().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn vortex_is_divergence_free() {
        for i in 0..50 {
            let x = Vec2::new(-1.0 + 0.041 * i as f64, 0.9 - 0.033 * i as f64);
            let g = DeformingVortex.grad(x, 0.1 * i as f64);
            assert_eq!(g.trace(), 0.0);
            let fd = fd_gradient(&DeformingVortex, x, 0.1 * i as f64);
            assert!(fd.trace().abs() < 1e-6 * g.norm_inf().max(1.0));
        }
    }
}
