use super::*;
use crate::fields::{ConstantField, ZeroField};
use crate::problems::{deforming_disk, stationary_disk, Ellipse};

struct Quiet;

impl Problem for Quiet {
    fn name(&self) -> &str {
        "quiet"
    }
    fn velocity(&self) -> &dyn VelocityField {
        &ZeroField
    }
    fn source(&self, _x: Vec2, _t: f64) -> f64 {
        0.0
    }
    fn dirichlet(&self, _x: Vec2, _t: f64) -> f64 {
        0.0
    }
    fn exact(&self, _x: Vec2, _t: f64) -> Option<(f64, Vec2)> {
        Some((0.0, Vec2::ZERO))
    }
    fn initial_curve(&self, count: usize) -> Result<MarkerCurve> {
        Ellipse::disk(Vec2::ZERO, 0.8).curve(count)
    }
    fn initial_perimeter(&self) -> f64 {
        Ellipse::disk(Vec2::ZERO, 0.8).perimeter()
    }
    fn boundary_point(&self, s: f64) -> Vec2 {
        Ellipse::disk(Vec2::ZERO, 0.8).point(2.0 * std::f64::consts::PI * s)
    }
    fn final_time(&self) -> f64 {
        0.5
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let cfg = RunConfig::new(2, 0.125, 0.125);
    let report = run(&Quiet, &cfg).unwrap();
    assert_eq!(report.steps.len(), 3);
    assert!(report.steps.iter().all(|s| s.l2_norm == 0.0));
    assert_eq!(report.e_n, Some(0.0));
}

#[test]
fn history_is_filled_with_k_levels() {
    let mut cfg = RunConfig::new(2, 0.125, 0.125);
    cfg.final_time = Some(0.0);
    let p = stationary_disk();
    let sim = initialize(&p, &cfg).unwrap();
    assert_eq!(sim.history.len(), 2);
    let times: Vec<f64> = sim.history.levels.iter().map(|l| l.t).collect();
    assert_eq!(times, vec![0.0, 0.125]);
    assert!(!sim.warnings.is_empty());
}

#[test]
fn config_validation() {
    assert!(RunConfig::new(5, 0.1, 0.1).validate().is_err());
    assert!(RunConfig::new(3, 0.1, 0.2).validate().is_err());
    let mut c = RunConfig::new(3, 0.1, 0.1);
    c.rk_order = 5;
    assert!(c.validate().is_err());
    c.rk_order = 4;
    assert!(c.validate().is_ok());
}

#[test]
fn pull_back_under_trivial_flows() {
    let grid = Grid::square(Vec2::new(-1.0, -1.0), 2.0, 0.25).unwrap();
    let space = Arc::new(FeSpace::new(grid, 2).unwrap());
    let u = space.interpolate(|x| x.x * x.x - x.y);
    let pts = [Vec2::new(0.1, 0.2), Vec2::new(-0.5, 0.33)];
    let z = ZeroField;
    let flow = FlowMap::new(&z, 0.1, ButcherTableau::rk4());
    let vals = pull_back(&u, &pts, &flow, 3, 2).unwrap();
    for (v, p) in vals.iter().zip(&pts) {
        assert_eq!(*v, u.eval(*p).unwrap().0);
    }
    let c = ConstantField(Vec2::new(1.0, 0.0));
    let flow = FlowMap::new(&c, 0.1, ButcherTableau::rk4());
    let vals = pull_back(&u, &pts, &flow, 3, 1).unwrap();
    for (v, p) in vals.iter().zip(&pts) {
        let q = *p - Vec2::new(0.1, 0.0);
        assert!((v - (q.x * q.x - q.y)).abs() < 1e-13);
    }
}

#[test]
fn short_deforming_run_is_deterministic_and_accurate() {
    let mut cfg = RunConfig::new(2, 0.125, 0.125);
    cfg.final_time = Some(0.5);
    cfg.snapshot_times = vec![0.0, 0.5];
    let p = deforming_disk();
    let a = run(&p, &cfg).unwrap();
    let b = run(&p, &cfg).unwrap();
    assert_eq!(a.e_n.unwrap().to_bits(), b.e_n.unwrap().to_bits());
    assert!(a.e_n.unwrap() < 1e-2, "{:?}", a.e_n);
    assert_eq!(a.snapshots.len(), 2);
    assert!(a.steps.iter().all(|s| s.solver_residual <= DEFAULT_SOLVE_TOL));
}
