//! BDF-k characteristic Galerkin time stepping on the tracked domain.

pub mod bdf;

use crate::cutmesh::{classify, Grid};
use crate::error::{Error, Result};
use crate::fem::{solve, Discretization, FeFunction, FeSpace, FormParams, FormWeights, LocalValues, DEFAULT_SOLVE_TOL};
use crate::flowmap::{ButcherTableau, FlowMap, VelocityField, DEFAULT_INVERSE_TOL};
use crate::geom::Vec2;
use crate::interface::MarkerCurve;
use crate::problems::Problem;
pub use bdf::BdfCoefficients;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Instant;

/// How the `k` starting levels are set from the exact solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Interpolate,
    Ritz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// BDF order and polynomial degree.
    pub k: usize,
    /// Order of the Runge-Kutta scheme used for tracking and pull-backs.
    pub rk_order: usize,
    pub h: f64,
    pub tau: f64,
    /// Target marker spacing; `None` picks `J = max(64, 2 |Γ_0| / h)`.
    pub eta: Option<f64>,
    pub gamma0: f64,
    pub gamma1: f64,
    /// Gauss points per direction for volume and boundary rules.
    pub q: usize,
    pub redistribute: bool,
    pub init: InitMode,
    /// `None` uses the problem's final time.
    pub final_time: Option<f64>,
    pub domain_origin: f64,
    pub domain_side: f64,
    pub snapshot_times: Vec<f64>,
}

impl RunConfig {
    pub fn new(k: usize, h: f64, tau: f64) -> Self {
        RunConfig {
            k,
            rk_order: k,
            h,
            tau,
            eta: None,
            gamma0: crate::fem::DEFAULT_GAMMA0,
            gamma1: 1.0 / crate::fem::DEFAULT_GAMMA0,
            q: k + 2,
            redistribute: true,
            init: InitMode::Interpolate,
            final_time: None,
            domain_origin: -1.5,
            domain_side: 3.0,
            snapshot_times: Vec::new(),
        }
    }

    /// Checks hard constraints; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=4).contains(&self.k) {
            return bad(format!("k = {}: supported orders are 2..=4", self.k));
        }
        if self.rk_order != self.k && self.rk_order != self.k + 1 {
            return bad(format!("rk_order = {}: must be k or k + 1", self.rk_order));
        }
        for (name, v) in
            [("h", self.h), ("tau", self.tau), ("gamma0", self.gamma0), ("gamma1", self.gamma1), ("domain_side", self.domain_side)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v}: must be positive"));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("eta = {eta}: must be positive"));
            }
        }
        if self.tau > self.h * (1.0 + 1e-12) {
            return bad(format!("tau = {} exceeds h = {}", self.tau, self.h));
        }
        if !(1..=15).contains(&self.q) {
            return bad(format!("q = {}: must be in 1..=15", self.q));
        }
        let mut warnings = Vec::new();
        if let Some(eta) = self.eta {
            let bound = self.tau.powf(self.k as f64 / 4.0);
            if eta > 4.0 * bound {
                warnings.push(format!("eta = {eta} is large compared with tau^(k/4) = {bound:.3e}"));
            }
        }
        Ok(warnings)
    }
}

/// One stored time level.
#[derive(Clone, Debug)]
pub struct Level {
    pub n: usize,
    pub t: f64,
    pub u: FeFunction,
    pub disc: Discretization,
}

/// The last `k` levels, oldest first.
#[derive(Clone, Debug, Default)]
pub struct BdfHistory {
    pub levels: VecDeque<Level>,
}

impl BdfHistory {
    pub fn latest(&self) -> &Level {
        self.levels.back().expect("history is empty")
    }

    /// Level `n - i` for `i = 1..=k`.
    pub fn back(&self, i: usize) -> &Level {
        &self.levels[self.levels.len() - i]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub l2_norm: f64,
    pub l2_error: Option<f64>,
    pub h1_error: Option<f64>,
    pub markers: usize,
    pub cover_cells: usize,
    pub cut_cells: usize,
    pub active_dofs: usize,
    pub solver_residual: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub config: RunConfig,
    pub warnings: Vec<String>,
    pub steps: Vec<StepRecord>,
    /// `(‖u(T) − u_h^N‖² + τ Σ_{n≥k} |u − u_h^n|_1²)^{1/2}` when the exact
    /// solution is known.
    pub e_n: Option<f64>,
    pub final_l2_error: Option<f64>,
    pub final_time: f64,
    pub wall_seconds: f64,
    pub failure: Option<String>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, MarkerCurve)>,
}

/// State of a run: configuration, discretisation data and history.
pub struct Simulation<'p> {
    pub problem: &'p dyn Problem,
    pub config: RunConfig,
    pub bdf: BdfCoefficients,
    pub tableau: ButcherTableau,
    pub space: Arc<FeSpace>,
    pub params: FormParams,
    pub eta_target: f64,
    pub history: BdfHistory,
    pub warnings: Vec<String>,
}

impl<'p> Simulation<'p> {
    pub fn flow(&self) -> FlowMap<'p, dyn VelocityField + 'p> {
        FlowMap::new(self.problem.velocity(), self.config.tau, self.tableau.clone())
    }

    pub fn final_time(&self) -> f64 {
        self.config.final_time.unwrap_or_else(|| self.problem.final_time())
    }

    /// Number of steps `N = T / τ` (rounded).
    pub fn num_steps(&self) -> usize {
        (self.final_time() / self.config.tau).round() as usize
    }

    fn grid(&self) -> Grid {
        self.space.grid
    }

    /// Next tracked curve: one RK step of all markers, then redistribution.
    pub fn track(&self, curve: &MarkerCurve) -> Result<MarkerCurve> {
        let next = curve.track_step(&self.flow())?;
        if self.config.redistribute {
            next.redistribute(0.4 * self.eta_target, 1.6 * self.eta_target)
        } else {
            Ok(next)
        }
    }

    fn level_data(&self, curve: MarkerCurve, n: usize) -> Result<Discretization> {
        let topo = classify(&self.grid(), &curve)?;
        match self.history.levels.back() {
            Some(prev) => prev.disc.rebuild(topo, curve),
            None => Discretization::new(self.space.clone(), topo, curve, self.params),
        }
        .map_err(|e| e.at_step(n))
    }

    fn exact_level(&self, disc: &Discretization, t: f64) -> Result<FeFunction> {
        let p = self.problem;
        if p.exact(Vec2::ZERO, t).is_none() {
            return Err(Error::Config(format!("problem '{}' has no exact solution for initial data", p.name())));
        }
        Ok(match self.config.init {
            InitMode::Interpolate => disc.interpolate(|x| p.exact(x, t).unwrap().0),
            InitMode::Ritz => disc.ritz_project(|x| p.exact(x, t).unwrap())?,
        })
    }
}

/// Builds the simulation and fills the history with levels `0..k`.
pub fn initialize<'p>(problem: &'p dyn Problem, config: &RunConfig) -> Result<Simulation<'p>> {
    let mut warnings = config.validate()?;
    let grid = Grid::square(Vec2::new(config.domain_origin, config.domain_origin), config.domain_side, config.h)?;
    let count = crate::studies::marker_count(problem, config);
    let eta_target = problem.initial_perimeter() / count as f64;
    let tableau = ButcherTableau::for_order(config.rk_order)?;
    let bdf = BdfCoefficients::new(config.k).expect("validated order");
    let space = Arc::new(FeSpace::new(grid, config.k)?);
    let params = FormParams { gamma0: config.gamma0, gamma1: config.gamma1, q: config.q };
    let mut sim = Simulation {
        problem,
        config: config.clone(),
        bdf,
        tableau,
        space,
        params,
        eta_target,
        history: BdfHistory::default(),
        warnings: Vec::new(),
    };
    if sim.num_steps() < config.k {
        warnings.push(format!("final time covers only {} steps; no BDF step is taken", sim.num_steps()));
    }
    sim.warnings = warnings;
    let mut curve = problem.initial_curve(count)?;
    for j in 0..config.k {
        if j > 0 {
            curve = sim.track(&curve).map_err(|e| e.at_step(j))?;
        }
        let t = j as f64 * config.tau;
        let disc = sim.level_data(curve.clone(), j)?;
        let u = sim.exact_level(&disc, t)?;
        sim.history.levels.push_back(Level { n: j, t, u, disc });
    }
    Ok(sim)
}

/// Values of `u ∘ X^{n, n-j}` at points given at `t_n`, by chained
/// single-step inversions of the discrete flow map.
pub fn pull_back<F: VelocityField + ?Sized>(
    u: &FeFunction,
    points: &[Vec2],
    flow: &FlowMap<'_, F>,
    n: usize,
    j: usize,
) -> Result<Vec<f64>> {
    let mut lv = LocalValues::new(u.space.k);
    points
        .iter()
        .map(|&y| {
            let x = flow.inverse(y, n, n - j, DEFAULT_INVERSE_TOL)?;
            Ok(u.eval_with(x, &mut lv)?.0)
        })
        .collect()
}

impl Simulation<'_> {
    /// Index of the next level to compute.
    pub fn next_index(&self) -> usize {
        self.history.latest().n + 1
    }

    /// Computes level `n = latest + 1` and rotates the history.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let n = self.next_index();
        self.advance_inner(n).map_err(|e| e.at_step(n))
    }

    fn advance_inner(&mut self, n: usize) -> Result<StepRecord> {
        let start = Instant::now();
        let k = self.config.k;
        let tau = self.config.tau;
        let t = n as f64 * tau;
        let curve = self.track(&self.history.latest().disc.curve)?;
        let disc = self.level_data(curve, n)?;

        let lambda = self.bdf.lambdas();
        let matrix = disc.assemble(FormWeights::system(lambda[0] / tau));
        let flow = self.flow();
        let problem = self.problem;
        let history = &self.history;
        let load = disc.load_vector(self.params.q, |x, lv| {
            let mut acc = 0.0;
            let mut y = x;
            for i in 1..=k {
                y = flow.inverse_step(y, n - i, DEFAULT_INVERSE_TOL)?;
                acc += lambda[i] * history.back(i).u.eval_with(y, lv)?.0;
            }
            Ok(problem.source(x, t) - acc / tau)
        })?;
        let data = disc.assemble_dirichlet_rhs(|x| problem.dirichlet(x, t));
        let rhs: Vec<f64> = load.iter().zip(&data).map(|(a, b)| a + b).collect();
        let (x, info) = solve(&matrix, &rhs, DEFAULT_SOLVE_TOL)?;
        let u = FeFunction::from_active(self.space.clone(), &disc.active, &x);
        if u.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Solver { reason: "non-finite solution".into(), residuals: vec![info.relative_residual] });
        }

        let (l2sq, _) = disc.error_integrals(&u, None)?;
        let (l2_error, h1_error) = match problem.exact(Vec2::ZERO, t) {
            Some(_) => {
                let exact = |x: Vec2| problem.exact(x, t).unwrap();
                let (e0, e1) = disc.error_integrals(&u, Some(&exact))?;
                (Some(e0.sqrt()), Some(e1.sqrt()))
            }
            None => (None, None),
        };
        let record = StepRecord {
            n,
            t,
            l2_norm: l2sq.sqrt(),
            l2_error,
            h1_error,
            markers: disc.curve.len(),
            cover_cells: disc.topo.cover.len(),
            cut_cells: disc.topo.cut_cells.len(),
            active_dofs: disc.active.len(),
            solver_residual: info.relative_residual,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        self.history.levels.push_back(Level { n, t, u, disc });
        while self.history.len() > k {
            self.history.levels.pop_front();
        }
        Ok(record)
    }
}

/// Runs to the final time. On failure the report holds the steps completed so
/// far and the error is returned alongside it.
pub fn run_with_partial(problem: &dyn Problem, config: &RunConfig) -> (RunReport, Option<Error>) {
    let start = Instant::now();
    let mut report = RunReport {
        problem: problem.name().to_string(),
        config: config.clone(),
        warnings: Vec::new(),
        steps: Vec::new(),
        e_n: None,
        final_l2_error: None,
        final_time: config.final_time.unwrap_or_else(|| problem.final_time()),
        wall_seconds: 0.0,
        failure: None,
        snapshots: Vec::new(),
    };
    let mut sim = match initialize(problem, config) {
        Ok(s) => s,
        Err(e) => {
            report.failure = Some(e.to_string());
            report.wall_seconds = start.elapsed().as_secs_f64();
            return (report, Some(e));
        }
    };
    report.warnings = sim.warnings.clone();
    let tau = config.tau;
    let near = |t: f64, s: f64| (t - s).abs() < 0.5 * tau;
    for lvl in &sim.history.levels {
        for &s in &config.snapshot_times {
            if near(lvl.t, s) {
                report.snapshots.push((s, lvl.disc.curve.clone()));
            }
        }
    }
    let n_steps = sim.num_steps();
    let mut h1_sum = 0.0;
    let mut failure = None;
    for _ in config.k..=n_steps {
        match sim.advance() {
            Ok(rec) => {
                if let Some(e1) = rec.h1_error {
                    h1_sum += tau * e1 * e1;
                }
                let lvl = sim.history.latest();
                for &s in &config.snapshot_times {
                    if near(lvl.t, s) {
                        report.snapshots.push((s, lvl.disc.curve.clone()));
                    }
                }
                report.steps.push(rec);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if failure.is_none() {
        if let Some(last) = report.steps.last() {
            if let Some(e0) = last.l2_error {
                report.final_l2_error = Some(e0);
                report.e_n = Some((e0 * e0 + h1_sum).sqrt());
            }
        }
    }
    report.failure = failure.as_ref().map(|e| e.to_string());
    report.wall_seconds = start.elapsed().as_secs_f64();
    (report, failure)
}

pub fn run(problem: &dyn Problem, config: &RunConfig) -> Result<RunReport> {
    match run_with_partial(problem, config) {
        (r, None) => Ok(r),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests;
