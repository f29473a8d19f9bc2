use fdcg::fields::{RotationField, ZeroField};
use fdcg::problems::{deforming_disk, Ellipse, Problem};
use fdcg::stepper::{initialize, pull_back, run, RunConfig};
use fdcg::{ButcherTableau, FlowMap, MarkerCurve, Result, Vec2, VelocityField};
use fdcg::{FeSpace, Grid};
use std::f64::consts::PI;
use std::sync::Arc;

/// `u = T(t) p(x, y)` with `p ∈ Q_2` and `T` quadratic, on the fixed unit
/// disk. BDF-2 and the Q_2 space are both exact for it.
struct PolynomialInTime;

impl PolynomialInTime {
    fn p(x: Vec2) -> (f64, Vec2, f64) {
        let v = x.x * x.x * x.y - 0.5 * x.x * x.y * x.y + 0.3 * x.y + 1.0;
        let g = Vec2::new(2.0 * x.x * x.y - 0.5 * x.y * x.y, x.x * x.x - x.x * x.y + 0.3);
        let lap = 2.0 * x.y - x.x;
        (v, g, lap)
    }
    fn t(t: f64) -> (f64, f64) {
        (1.0 + t - 0.5 * t * t, 1.0 - t)
    }
}

impl Problem for PolynomialInTime {
    fn name(&self) -> &str {
        "polynomial"
    }
    fn velocity(&self) -> &dyn VelocityField {
        &ZeroField
    }
    fn source(&self, x: Vec2, t: f64) -> f64 {
        let (v, _, lap) = Self::p(x);
        let (tt, dt) = Self::t(t);
        dt * v - tt * lap
    }
    fn dirichlet(&self, x: Vec2, t: f64) -> f64 {
        self.exact(x, t).unwrap().0
    }
    fn exact(&self, x: Vec2, t: f64) -> Option<(f64, Vec2)> {
        let (v, g, _) = Self::p(x);
        let (tt, _) = Self::t(t);
        Some((tt * v, g * tt))
    }
    fn initial_curve(&self, count: usize) -> Result<MarkerCurve> {
        Ellipse::disk(Vec2::ZERO, 0.9).curve(count)
    }
    fn initial_perimeter(&self) -> f64 {
        Ellipse::disk(Vec2::ZERO, 0.9).perimeter()
    }
    fn boundary_point(&self, s: f64) -> Vec2 {
        Ellipse::disk(Vec2::ZERO, 0.9).point(2.0 * PI * s)
    }
    fn final_time(&self) -> f64 {
        0.75
    }
}

#[test]
fn polynomial_data_is_reproduced_to_solver_tolerance() {
    let report = run(&PolynomialInTime, &RunConfig::new(2, 0.25, 0.25)).unwrap();
    assert_eq!(report.steps.len(), 2);
    let e = report.e_n.unwrap();
    assert!(e < 1e-8, "e^N = {e:e}");
}

#[test]
fn rotation_pull_back_matches_composed_polynomial() {
    // p has total degree 3, so its Q_3 interpolant is exact and only the
    // flow map error remains.
    let p = |x: Vec2| x.x * x.x * x.y - 0.4 * x.y * x.y * x.y + 0.7 * x.x - 0.2;
    let field = RotationField::unit();
    let k = 3;
    let grid = Grid::square(Vec2::new(-1.5, -1.5), 3.0, 0.125).unwrap();
    let space = Arc::new(FeSpace::new(grid, k).unwrap());
    let mut errors = Vec::new();
    for tau in [0.1, 0.05, 0.025] {
        let u = space.interpolate(p);
        let flow = FlowMap::new(&field, tau, ButcherTableau::for_order(k).unwrap());
        let points: Vec<Vec2> = (0..50)
            .map(|i| {
                let (r, a) = (0.8 * i as f64 / 50.0, 0.37 * i as f64);
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let values = pull_back(&u, &points, &flow, 5, 2).unwrap();
        let err = points.iter().zip(&values).map(|(&y, v)| (v - p(field.rotate(y, -2.0 * tau))).abs()).fold(0.0, f64::max);
        errors.push(err);
    }
    for w in errors.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate > k as f64 + 0.7, "rate {rate}, errors {errors:?}");
    }
}

#[test]
fn initial_history_has_interpolation_order() {
    let k = 2;
    let p = deforming_disk();
    let mut errs = Vec::new();
    for h in [0.125, 0.0625, 0.03125] {
        let sim = initialize(&p, &RunConfig::new(k, h, h)).unwrap();
        let lvl = sim.history.latest();
        let exact = |x: Vec2| p.exact(x, lvl.t).unwrap();
        errs.push(lvl.disc.error_integrals(&lvl.u, Some(&exact)).unwrap().0.sqrt());
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > k as f64 + 0.7, "{errs:?}");
    }
}

#[test]
fn one_deforming_step_at_coarse_resolution() {
    let cfg = RunConfig::new(3, 1.0 / 16.0, 1.0 / 16.0);
    let p = deforming_disk();
    let mut sim = initialize(&p, &cfg).unwrap();
    let before = sim.history.latest().disc.discrete_norms(&sim.history.latest().u).unwrap().l2;
    let rec = sim.advance().unwrap();
    assert_eq!(rec.n, 3);
    assert!(rec.solver_residual < 1e-9);
    // The exact solution decays like e^{-t}; no growth beyond a few percent.
    assert!(rec.l2_norm < 1.05 * before, "{} vs {before}", rec.l2_norm);
    assert!(rec.l2_error.unwrap() < 1e-4);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let mut cfg = RunConfig::new(2, 0.125, 0.125);
    cfg.final_time = Some(0.5);
    let p = deforming_disk();
    let a = run(&p, &cfg).unwrap();
    let b = run(&p, &cfg).unwrap();
    assert_eq!(a.e_n.unwrap().to_bits(), b.e_n.unwrap().to_bits());
}
