//! Built-in test problems: velocity, data, exact solution and initial domain.

use crate::error::{Error, Result};
use crate::fields::{DeformingVortex, RotationField, ZeroField};
use crate::flowmap::VelocityField;
use crate::geom::Vec2;
use crate::interface::MarkerCurve;
use std::f64::consts::PI;

/// Data of `∂_t u + w·∇u − Δu = f` in `Ω_t`, `u = g` on `Γ_t`.
pub trait Problem: Sync {
    fn name(&self) -> &str;
    fn velocity(&self) -> &dyn VelocityField;
    fn source(&self, x: Vec2, t: f64) -> f64;
    fn dirichlet(&self, x: Vec2, t: f64) -> f64;
    /// Exact solution and its gradient, when known.
    fn exact(&self, x: Vec2, t: f64) -> Option<(f64, Vec2)>;
    /// Initial boundary with `count` markers.
    fn initial_curve(&self, count: usize) -> Result<MarkerCurve>;
    fn initial_perimeter(&self) -> f64;
    /// Initial boundary at normalised parameter `s ∈ [0, 1)`, matching the
    /// marker parameters of `initial_curve`.
    fn boundary_point(&self, s: f64) -> Vec2;
    fn final_time(&self) -> f64;
}

/// `u = e^{-t} sin(πx) sin(πy)`.
#[inline]
pub fn manufactured_u(x: Vec2, t: f64) -> (f64, Vec2) {
    let e = (-t).exp();
    let (sx, cx) = (PI * x.x).sin_cos();
    let (sy, cy) = (PI * x.y).sin_cos();
    (e * sx * sy, Vec2::new(e * PI * cx * sy, e * PI * sx * cy))
}

/// Initial domain: ellipse with semi-axes `(a, b)` centred at `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub center: Vec2,
    pub a: f64,
    pub b: f64,
}

impl Ellipse {
    pub fn disk(center: Vec2, r: f64) -> Self {
        Ellipse { center, a: r, b: r }
    }

    pub fn point(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        self.center + Vec2::new(self.a * c, self.b * s)
    }

    /// Ramanujan's approximation (exact for circles).
    pub fn perimeter(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        let h = ((a - b) / (a + b)).powi(2);
        PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
    }

    /// Markers uniform in the angle; the knot spacing is the mean chord.
    pub fn curve(&self, count: usize) -> Result<MarkerCurve> {
        let eta = self.perimeter() / count as f64;
        MarkerCurve::from_fn(count, eta, |u| self.point(2.0 * PI * u))
    }
}

/// Manufactured solution `e^{-t} sin(πx) sin(πy)` transported by a given
/// velocity on a moving domain, with matching source and Dirichlet data.
pub struct Manufactured<F: VelocityField> {
    pub name: String,
    pub field: F,
    pub domain: Ellipse,
    pub final_time: f64,
}

impl<F: VelocityField> Problem for Manufactured<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn velocity(&self) -> &dyn VelocityField {
        &self.field
    }

    fn source(&self, x: Vec2, t: f64) -> f64 {
        let (u, g) = manufactured_u(x, t);
        (2.0 * PI * PI - 1.0) * u + self.field.eval(x, t).dot(g)
    }

    fn dirichlet(&self, x: Vec2, t: f64) -> f64 {
        manufactured_u(x, t).0
    }

    fn exact(&self, x: Vec2, t: f64) -> Option<(f64, Vec2)> {
        Some(manufactured_u(x, t))
    }

    fn initial_curve(&self, count: usize) -> Result<MarkerCurve> {
        self.domain.curve(count)
    }

    fn initial_perimeter(&self) -> f64 {
        self.domain.perimeter()
    }

    fn boundary_point(&self, s: f64) -> Vec2 {
        self.domain.point(2.0 * PI * s)
    }

    fn final_time(&self) -> f64 {
        self.final_time
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["paper-sec7", "stationary-disk", "rotation"];

/// Unit disk at the origin deformed by the reversing vortex up to `T = 2`.
pub fn deforming_disk() -> Manufactured<DeformingVortex> {
    Manufactured { name: "paper-sec7".into(), field: DeformingVortex, domain: Ellipse::disk(Vec2::ZERO, 1.0), final_time: 2.0 }
}

/// Fixed unit disk (zero velocity).
pub fn stationary_disk() -> Manufactured<ZeroField> {
    Manufactured { name: "stationary-disk".into(), field: ZeroField, domain: Ellipse::disk(Vec2::ZERO, 1.0), final_time: 1.0 }
}

/// Off-centre ellipse in rigid rotation about the origin.
pub fn rotating_ellipse() -> Manufactured<RotationField> {
    Manufactured {
        name: "rotation".into(),
        field: RotationField::unit(),
        domain: Ellipse { center: Vec2::new(0.3, 0.0), a: 0.6, b: 0.4 },
        final_time: 1.0,
    }
}

pub fn builtin(name: &str) -> Result<Box<dyn Problem>> {
    match name {
        "paper-sec7" => Ok(Box::new(deforming_disk())),
        "stationary-disk" => Ok(Box::new(stationary_disk())),
        "rotation" => Ok(Box::new(rotating_ellipse())),
        other => Err(Error::Config(format!("unknown problem '{other}' (expected one of {})", BUILTIN_NAMES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_matches_finite_difference_residual() {
        let p = deforming_disk();
        let (x, t) = (Vec2::new(0.3, -0.4), 0.7);
        let e = 1e-4;
        let u = |x: Vec2, t: f64| manufactured_u(x, t).0;
        let ut = (u(x, t + e) - u(x, t - e)) / (2.0 * e);
        let lap = (u(x + Vec2::new(e, 0.0), t) + u(x - Vec2::new(e, 0.0), t) + u(x + Vec2::new(0.0, e), t) + u(x - Vec2::new(0.0, e), t)
            - 4.0 * u(x, t))
            / (e * e);
        let (_, g) = manufactured_u(x, t);
        let want = ut + p.field.eval(x, t).dot(g) - lap;
        assert!((p.source(x, t) - want).abs() < 1e-5);
    }

    #[test]
    fn builtins_resolve_and_boundary_data_agree() {
        for name in BUILTIN_NAMES {
            let p = builtin(name).unwrap();
            assert_eq!(p.name(), name);
            let c = p.initial_curve(64).unwrap();
            for &m in c.markers() {
                assert!((p.dirichlet(m, 0.3) - p.exact(m, 0.3).unwrap().0).abs() < 1e-10);
            }
        }
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn ellipse_perimeter() {
        assert!((Ellipse::disk(Vec2::ZERO, 2.0).perimeter() - 4.0 * PI).abs() < 1e-14);
        let e = Ellipse { center: Vec2::ZERO, a: 0.6, b: 0.4 };
        let c = e.curve(2048).unwrap();
        assert!((c.arc_length() - e.perimeter()).abs() < 1e-5);
    }
}
