//! Tracking-only and projection-only studies on a built-in problem. Both
//! measure one discretisation ingredient in isolation from the time stepper.

use crate::cutmesh::{classify, Grid};
use crate::error::{Error, Result};
use crate::fem::{Discretization, FeSpace, FormParams};
use crate::flowmap::{ButcherTableau, FlowMap};
use crate::geom::Vec2;
use crate::problems::Problem;
use crate::stepper::RunConfig;
use serde::Serialize;
use std::sync::Arc;

/// Spline samples per marker interval when measuring the boundary error.
const SAMPLES_PER_INTERVAL: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct TrackingResult {
    /// `max_l |γ_h(l) − X(T; 0, γ(l))|` over spline samples.
    pub sup_error: f64,
    pub markers: usize,
    pub steps: usize,
    pub final_time: f64,
}

/// Tracks the initial boundary without redistribution and compares the
/// spline with the exact image of the same parameter under the closed-form
/// flow. Requires a problem whose velocity has one.
pub fn tracking_error(problem: &dyn Problem, config: &RunConfig) -> Result<TrackingResult> {
    let field = problem.velocity();
    let final_time = config.final_time.unwrap_or_else(|| problem.final_time());
    if field.exact_flow(Vec2::ZERO, 0.0, final_time).is_none() {
        return Err(Error::Config(format!("problem '{}' has no closed-form flow to track against", problem.name())));
    }
    let count = marker_count(problem, config);
    let steps = (final_time / config.tau).round() as usize;
    let flow = FlowMap::new(field, config.tau, ButcherTableau::for_order(config.rk_order)?);
    let mut curve = problem.initial_curve(count)?;
    for _ in 0..steps {
        curve = curve.track_step(&flow)?;
    }
    let t_end = steps as f64 * config.tau;
    let period = curve.period();
    let samples = SAMPLES_PER_INTERVAL * curve.len();
    let mut sup: f64 = 0.0;
    for i in 0..samples {
        let s = i as f64 / samples as f64;
        let exact = field.exact_flow(problem.boundary_point(s), 0.0, t_end).expect("checked above");
        sup = sup.max((curve.point(s * period) - exact).norm());
    }
    Ok(TrackingResult { sup_error: sup, markers: count, steps, final_time: t_end })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionResult {
    pub l2_error: f64,
    pub h1_error: f64,
    pub active_dofs: usize,
    pub cut_cells: usize,
}

/// Modified Ritz projection of the exact solution at `t = 0` on the initial
/// domain, with errors measured on the discrete domain.
pub fn projection_error(problem: &dyn Problem, config: &RunConfig) -> Result<ProjectionResult> {
    if problem.exact(Vec2::ZERO, 0.0).is_none() {
        return Err(Error::Config(format!("problem '{}' has no exact solution to project", problem.name())));
    }
    let grid = Grid::square(Vec2::new(config.domain_origin, config.domain_origin), config.domain_side, config.h)?;
    let space = Arc::new(FeSpace::new(grid, config.k)?);
    let curve = problem.initial_curve(marker_count(problem, config))?;
    let topo = classify(&grid, &curve)?;
    let params = FormParams { gamma0: config.gamma0, gamma1: config.gamma1, q: config.q };
    let disc = Discretization::new(space, topo, curve, params)?;
    let exact = |x: Vec2| problem.exact(x, 0.0).expect("checked above");
    let p = disc.ritz_project(exact)?;
    let (l2, h1) = disc.error_integrals(&p, Some(&exact))?;
    Ok(ProjectionResult { l2_error: l2.sqrt(), h1_error: h1.sqrt(), active_dofs: disc.active.len(), cut_cells: disc.topo.cut_cells.len() })
}

/// Same rule as the time stepper: `|Γ_0| / η` markers, or
/// `max(64, 2 |Γ_0| / h)` when no spacing is given.
pub fn marker_count(problem: &dyn Problem, config: &RunConfig) -> usize {
    let perimeter = problem.initial_perimeter();
    match config.eta {
        Some(eta) => ((perimeter / eta).round() as usize).max(8),
        None => 64usize.max((2.0 * perimeter / config.h).ceil() as usize),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{deforming_disk, rotating_ellipse, stationary_disk};

    #[test]
    fn stationary_tracking_is_exact_at_markers_and_small_between() {
        let mut cfg = RunConfig::new(3, 0.1, 0.1);
        cfg.eta = Some(0.05);
        let r = tracking_error(&stationary_disk(), &cfg).unwrap();
        assert_eq!(r.steps, 10);
        // Only the spline interpolation error of the circle remains.
        assert!(r.sup_error < 1e-5, "{}", r.sup_error);
    }

    #[test]
    fn tracking_needs_closed_form_flow() {
        let cfg = RunConfig::new(3, 0.1, 0.1);
        assert!(matches!(tracking_error(&deforming_disk(), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn rotation_tracking_error_decreases() {
        let mut errs = Vec::new();
        for tau in [0.1, 0.05] {
            let mut cfg = RunConfig::new(3, tau, tau);
            cfg.eta = Some(tau);
            errs.push(tracking_error(&rotating_ellipse(), &cfg).unwrap().sup_error);
        }
        assert!(errs[1] < errs[0] / 4.0, "{errs:?}");
    }

    #[test]
    fn projection_reproduces_small_error() {
        let cfg = RunConfig::new(2, 0.25, 0.25);
        let r = projection_error(&stationary_disk(), &cfg).unwrap();
        assert!(r.l2_error < 1e-2 && r.h1_error < 0.2, "{r:?}");
        assert!(r.active_dofs > 0 && r.cut_cells > 0);
    }
}
