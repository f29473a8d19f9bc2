//! Explicit Runge-Kutta discretisation of the characteristic ODE `dX/dt = w(X, t)`,
//! the composed discrete flow maps between time levels, their inverses and
//! Jacobians.
//!
//! Time level `n` sits at `t_n = t0 + n * tau`. A single sub-step maps a
//! point at `t_n` to `t_{n+1}`; multi-step maps compose sub-steps left to
//! right, so the same arithmetic path is used no matter how a range is split.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};

/// A time-dependent planar velocity field.
pub trait VelocityField: Sync {
    fn eval(&self, x: Vec2, t: f64) -> Vec2;

    /// Spatial gradient, `m[i][j] = d w_i / d x_j`. Defaults to central
    /// differences.
    fn grad(&self, x: Vec2, t: f64) -> Mat2 {
        fd_gradient(self, x, t)
    }

    fn div(&self, x: Vec2, t: f64) -> f64 {
        self.grad(x, t).trace()
    }

    /// Value and gradient together; override when they share work.
    fn eval_with_grad(&self, x: Vec2, t: f64) -> (Vec2, Mat2) {
        (self.eval(x, t), self.grad(x, t))
    }

    /// Exact position at `t1` of the particle at `x` at `t0`, for fields
    /// with a closed-form flow.
    fn exact_flow(&self, _x: Vec2, _t0: f64, _t1: f64) -> Option<Vec2> {
        None
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        (**self).eval(x, t)
    }
    fn grad(&self, x: Vec2, t: f64) -> Mat2 {
        (**self).grad(x, t)
    }
    fn div(&self, x: Vec2, t: f64) -> f64 {
        (**self).div(x, t)
    }
    fn eval_with_grad(&self, x: Vec2, t: f64) -> (Vec2, Mat2) {
        (**self).eval_with_grad(x, t)
    }
    fn exact_flow(&self, x: Vec2, t0: f64, t1: f64) -> Option<Vec2> {
        (**self).exact_flow(x, t0, t1)
    }
}

impl<F: VelocityField + ?Sized + Send> VelocityField for Box<F> {
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        (**self).eval(x, t)
    }
    fn grad(&self, x: Vec2, t: f64) -> Mat2 {
        (**self).grad(x, t)
    }
    fn div(&self, x: Vec2, t: f64) -> f64 {
        (**self).div(x, t)
    }
}

/// Central-difference gradient with step `1e-6 * max(1, |x|)`.
pub fn fd_gradient<F: VelocityField + ?Sized>(field: &F, x: Vec2, t: f64) -> Mat2 {
    let h = 1e-6 * x.norm().max(1.0);
    let dx = Vec2::new(h, 0.0);
    let dy = Vec2::new(0.0, h);
    let gx = (field.eval(x + dx, t) - field.eval(x - dx, t)) * (0.5 / h);
    let gy = (field.eval(x + dy, t) - field.eval(x - dy, t)) * (0.5 / h);
    Mat2::new(gx.x, gy.x, gx.y, gy.y)
}

pub const MAX_STAGES: usize = 6;

/// Coefficients of an explicit Runge-Kutta scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    /// Strictly lower-triangular stage matrix, `a[i][j]` for `j < i`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
}

impl ButcherTableau {
    fn from_rows(name: &'static str, order: usize, rows: &[&[f64]], b: &[f64], c: &[f64]) -> Self {
        let s = b.len();
        let mut a = vec![vec![0.0; s]; s];
        for (i, row) in rows.iter().enumerate() {
            a[i + 1][..row.len()].copy_from_slice(row);
        }
        ButcherTableau { name, a, b: b.to_vec(), c: c.to_vec(), order }
    }

    pub fn euler() -> Self {
        Self::from_rows("euler", 1, &[], &[1.0], &[0.0])
    }

    pub fn midpoint() -> Self {
        Self::from_rows("midpoint", 2, &[&[0.5]], &[0.0, 1.0], &[0.0, 0.5])
    }

    /// Kutta's third-order method.
    pub fn kutta3() -> Self {
        Self::from_rows("kutta3", 3, &[&[0.5], &[-1.0, 2.0]], &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], &[0.0, 0.5, 1.0])
    }

    pub fn rk4() -> Self {
        Self::from_rows(
            "rk4",
            4,
            &[&[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
            &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            &[0.0, 0.5, 0.5, 1.0],
        )
    }

    /// Six-stage fifth-order solution of the Cash-Karp pair.
    pub fn cash_karp5() -> Self {
        Self::from_rows(
            "cash-karp5",
            5,
            &[
                &[1.0 / 5.0],
                &[3.0 / 40.0, 9.0 / 40.0],
                &[3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0],
                &[-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0],
                &[1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0],
            ],
            &[37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0],
            &[0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0],
        )
    }

    /// The shipped tableau of the given order (1..=5).
    pub fn for_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self::euler()),
            2 => Ok(Self::midpoint()),
            3 => Ok(Self::kutta3()),
            4 => Ok(Self::rk4()),
            5 => Ok(Self::cash_karp5()),
            _ => Err(Error::Config(format!("no Runge-Kutta tableau of order {order}"))),
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

/// One explicit RK step of signed length `dt` from `(x, t)`.
/// On failure returns the index of the first stage with a non-finite velocity.
pub fn rk_step<F: VelocityField + ?Sized>(field: &F, x: Vec2, t: f64, dt: f64, tab: &ButcherTableau) -> std::result::Result<Vec2, usize> {
    let s = tab.stages();
    let mut k = [Vec2::ZERO; MAX_STAGES];
    let mut out = x;
    for i in 0..s {
        let mut xi = x;
        for j in 0..i {
            let a = tab.a[i][j];
            if a != 0.0 {
                xi += k[j] * (dt * a);
            }
        }
        k[i] = field.eval(xi, t + tab.c[i] * dt);
        if !k[i].is_finite() {
            return Err(i);
        }
        out += k[i] * (dt * tab.b[i]);
    }
    Ok(out)
}

/// One RK step together with the exact Jacobian of the discrete map, from the
/// stage recursion `D phi_i = I + dt sum_j a_ij grad w(x_j) D phi_j`.
pub fn rk_step_jacobian<F: VelocityField + ?Sized>(
    field: &F,
    x: Vec2,
    t: f64,
    dt: f64,
    tab: &ButcherTableau,
) -> std::result::Result<(Vec2, Mat2), usize> {
    let s = tab.stages();
    let mut k = [Vec2::ZERO; MAX_STAGES];
    // grad w(x_i) * D phi_i
    let mut gk = [Mat2::ZERO; MAX_STAGES];
    let mut out = x;
    let mut jac = Mat2::IDENTITY;
    for i in 0..s {
        let mut xi = x;
        let mut dphi = Mat2::IDENTITY;
        for j in 0..i {
            let a = tab.a[i][j];
            if a != 0.0 {
                xi += k[j] * (dt * a);
                dphi = dphi + gk[j].scale(dt * a);
            }
        }
        let ti = t + tab.c[i] * dt;
        let (ki, g) = field.eval_with_grad(xi, ti);
        k[i] = ki;
        if !k[i].is_finite() || !g.is_finite() {
            return Err(i);
        }
        gk[i] = g * dphi;
        out += k[i] * (dt * tab.b[i]);
        jac = jac + gk[i].scale(dt * tab.b[i]);
    }
    Ok((out, jac))
}

pub const DEFAULT_INVERSE_TOL: f64 = 1e-13;
const MAX_NEWTON: usize = 50;

/// Discrete flow maps of one field on a uniform time grid.
#[derive(Clone, Debug)]
pub struct FlowMap<'a, F: VelocityField + ?Sized> {
    field: &'a F,
    tau: f64,
    t0: f64,
    tableau: ButcherTableau,
}

impl<'a, F: VelocityField + ?Sized> FlowMap<'a, F> {
    pub fn new(field: &'a F, tau: f64, tableau: ButcherTableau) -> Self {
        assert!(tau > 0.0, "time step must be positive");
        FlowMap { field, tau, t0: 0.0, tableau }
    }

    pub fn with_start_time(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }

    pub fn field(&self) -> &'a F {
        self.field
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.tau
    }

    /// Sub-step `n -> n + 1`.
    pub fn step(&self, x: Vec2, n: usize) -> Result<Vec2> {
        rk_step(self.field, x, self.time(n), self.tau, &self.tableau).map_err(|stage| Error::Evaluation { step: n, stage })
    }

    pub fn step_with_jacobian(&self, x: Vec2, n: usize) -> Result<(Vec2, Mat2)> {
        rk_step_jacobian(self.field, x, self.time(n), self.tau, &self.tableau).map_err(|stage| Error::Evaluation { step: n, stage })
    }

    /// Composition of sub-steps `n_from -> n_to` applied to one point.
    pub fn map_point(&self, x: Vec2, n_from: usize, n_to: usize) -> Result<Vec2> {
        assert!(n_from <= n_to);
        (n_from..n_to).try_fold(x, |p, n| self.step(p, n))
    }

    pub fn forward(&self, points: &[Vec2], n_from: usize, n_to: usize) -> Result<Vec<Vec2>> {
        points.iter().map(|&p| self.map_point(p, n_from, n_to)).collect()
    }

    /// Jacobian of the composed discrete map, accumulated by the chain rule.
    pub fn jacobian(&self, x: Vec2, n_from: usize, n_to: usize) -> Result<Mat2> {
        assert!(n_from <= n_to);
        let mut p = x;
        let mut jac = Mat2::IDENTITY;
        for n in n_from..n_to {
            let (q, j) = self.step_with_jacobian(p, n)?;
            jac = j * jac;
            p = q;
        }
        Ok(jac)
    }

    /// Inverse of sub-step `n -> n + 1`: finds `x` with `step(x, n) = y`.
    ///
    /// Newton iteration on the exact discrete map, started from one backward
    /// RK step.
    pub fn inverse_step(&self, y: Vec2, n: usize, tol: f64) -> Result<Vec2> {
        let mut x =
            rk_step(self.field, y, self.time(n + 1), -self.tau, &self.tableau).map_err(|stage| Error::Evaluation { step: n, stage })?;
        let floor = 64.0 * f64::EPSILON * (1.0 + y.max_abs());
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_NEWTON {
            let (fx, jac) = self.step_with_jacobian(x, n)?;
            let r = fx - y;
            residual = r.max_abs();
            if residual <= tol {
                return Ok(x);
            }
            let inv = jac.inverse().ok_or(Error::Inversion { step: n, point: y, residual })?;
            let dx = inv.mul_vec(r);
            x -= dx;
            let step = dx.max_abs();
            // Quadratic convergence: the next residual is of order step²
            // times the (small) curvature of the map.
            if step * step <= 1e-3 * tol || (step <= 4.0 * f64::EPSILON * (1.0 + x.max_abs()) && residual <= floor) {
                return Ok(x);
            }
        }
        Err(Error::Inversion { step: n, point: y, residual })
    }

    /// Inverse of the composed map `n_from -> n_to`, as a chain of
    /// single-step inversions from `n_to` back to `n_from`.
    pub fn inverse(&self, y: Vec2, n_to: usize, n_from: usize, tol: f64) -> Result<Vec2> {
        assert!(n_from <= n_to);
        (n_from..n_to).rev().try_fold(y, |p, n| self.inverse_step(p, n, tol))
    }
}
