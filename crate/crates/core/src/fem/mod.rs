//! Unfitted `Q_k` finite elements on the background grid: spaces, nodal
//! functions, assembly of the Nitsche/ghost-penalty forms, the modified Ritz
//! projection and discrete norms.

pub mod basis;
pub mod sparse;

use crate::cutmesh::{CutTopology, Grid, GridEdge};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::interface::MarkerCurve;
use crate::quadrature::{boundary_rule, cut_cell_rule, full_cell_rule, gauss_table, BoundaryRule, QuadRule};
use basis::Basis1d;
use rayon::prelude::*;
use serde::Serialize;
use sparse::CsrMatrix;
use std::sync::Arc;

pub use sparse::{smallest_eigenvalue, solve, SolveInfo, DEFAULT_SOLVE_TOL};

/// Continuous `Q_k` space on the whole grid with Gauss-Lobatto nodes.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub grid: Grid,
    pub k: usize,
    pub basis: Basis1d,
    nxd: usize,
    nyd: usize,
}

/// Values and gradients of the `(k+1)^2` local basis functions at a point.
#[derive(Clone, Debug)]
pub struct LocalValues {
    pub phi: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    bx: [Vec<f64>; 2],
    by: [Vec<f64>; 2],
}

impl LocalValues {
    pub fn new(k: usize) -> Self {
        let n = (k + 1) * (k + 1);
        LocalValues {
            phi: vec![0.0; n],
            dx: vec![0.0; n],
            dy: vec![0.0; n],
            bx: [vec![0.0; k + 1], vec![0.0; k + 1]],
            by: [vec![0.0; k + 1], vec![0.0; k + 1]],
        }
    }
}

impl FeSpace {
    pub fn new(grid: Grid, k: usize) -> Result<Self> {
        if !(1..=basis::MAX_DEGREE).contains(&k) {
            return Err(Error::Config(format!("polynomial degree {k} not in 1..={}", basis::MAX_DEGREE)));
        }
        Ok(FeSpace { grid, k, basis: Basis1d::new(k), nxd: grid.nx * k + 1, nyd: grid.ny * k + 1 })
    }

    pub fn ndofs(&self) -> usize {
        self.nxd * self.nyd
    }

    pub fn local_len(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }

    /// Global dof of local index `b (k+1) + a` in cell `c`.
    #[inline]
    pub fn dof(&self, c: usize, a: usize, b: usize) -> usize {
        let (i, j) = self.grid.ij(c);
        (j * self.k + b) * self.nxd + i * self.k + a
    }

    pub fn cell_dofs(&self, c: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.local_len());
        for b in 0..=self.k {
            for a in 0..=self.k {
                out.push(self.dof(c, a, b));
            }
        }
        out
    }

    pub fn dof_point(&self, g: usize) -> Vec2 {
        let (gi, gj) = (g % self.nxd, g / self.nxd);
        let node = |gi: usize| (gi / self.k, self.basis.nodes[gi % self.k]);
        let (ci, ti) = node(gi);
        let (cj, tj) = node(gj);
        self.grid.origin + Vec2::new((ci as f64 + ti) * self.grid.h, (cj as f64 + tj) * self.grid.h)
    }

    /// Fills `out` with basis values and gradients of cell `c` at `x`.
    #[inline]
    pub fn local_eval(&self, c: usize, x: Vec2, out: &mut LocalValues) {
        let (i, j) = self.grid.ij(c);
        let h = self.grid.h;
        let tx = (x.x - self.grid.origin.x) / h - i as f64;
        let ty = (x.y - self.grid.origin.y) / h - j as f64;
        self.basis.eval_into(tx, 0, &mut out.bx[0]);
        self.basis.eval_into(tx, 1, &mut out.bx[1]);
        self.basis.eval_into(ty, 0, &mut out.by[0]);
        self.basis.eval_into(ty, 1, &mut out.by[1]);
        let inv_h = 1.0 / h;
        let n1 = self.k + 1;
        for b in 0..n1 {
            for a in 0..n1 {
                let p = b * n1 + a;
                out.phi[p] = out.bx[0][a] * out.by[0][b];
                out.dx[p] = out.bx[1][a] * out.by[0][b] * inv_h;
                out.dy[p] = out.bx[0][a] * out.by[1][b] * inv_h;
            }
        }
    }

    /// Nodal interpolant on all dofs.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn(Vec2) -> f64 + Sync) -> FeFunction {
        let coeffs = (0..self.ndofs()).into_par_iter().map(|g| f(self.dof_point(g))).collect();
        FeFunction { space: self.clone(), coeffs }
    }
}

/// Global dofs belonging to cover cells, in increasing order.
#[derive(Clone, Debug)]
pub struct ActiveDofs {
    pub global: Vec<usize>,
    local: Vec<u32>,
}

const INACTIVE: u32 = u32::MAX;

impl ActiveDofs {
    pub fn new(space: &FeSpace, topo: &CutTopology) -> Self {
        let mut local = vec![INACTIVE; space.ndofs()];
        for &c in &topo.cover {
            for g in space.cell_dofs(c) {
                local[g] = 0;
            }
        }
        let mut global = Vec::new();
        for (g, l) in local.iter_mut().enumerate() {
            if *l == 0 {
                *l = global.len() as u32;
                global.push(g);
            }
        }
        ActiveDofs { global, local }
    }

    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }

    #[inline]
    pub fn local(&self, g: usize) -> Option<usize> {
        match self.local[g] {
            INACTIVE => None,
            l => Some(l as usize),
        }
    }

    pub fn is_active(&self, g: usize) -> bool {
        self.local[g] != INACTIVE
    }
}

/// Global coefficient vector of a finite element function.
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub space: Arc<FeSpace>,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.ndofs();
        FeFunction { space, coeffs: vec![0.0; n] }
    }

    /// Zeroes every coefficient outside `active`.
    pub fn restrict(mut self, active: &ActiveDofs) -> Self {
        for (g, c) in self.coeffs.iter_mut().enumerate() {
            if !active.is_active(g) {
                *c = 0.0;
            }
        }
        self
    }

    pub fn from_active(space: Arc<FeSpace>, active: &ActiveDofs, x: &[f64]) -> Self {
        let mut f = FeFunction::zero(space);
        for (l, &g) in active.global.iter().enumerate() {
            f.coeffs[g] = x[l];
        }
        f
    }

    pub fn active_values(&self, active: &ActiveDofs) -> Vec<f64> {
        active.global.iter().map(|&g| self.coeffs[g]).collect()
    }

    /// Value and gradient at `x`; zero coefficients extend the function by
    /// zero-weighted basis functions outside the active set.
    pub fn eval(&self, x: Vec2) -> Result<(f64, Vec2)> {
        let mut lv = LocalValues::new(self.space.k);
        self.eval_with(x, &mut lv)
    }

    pub fn eval_with(&self, x: Vec2, lv: &mut LocalValues) -> Result<(f64, Vec2)> {
        let space = &self.space;
        let (i, j) = space.grid.locate(x).ok_or(Error::OutsideDomain(x))?;
        let c = space.grid.index(i, j);
        space.local_eval(c, x, lv);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        let n1 = space.k + 1;
        for b in 0..n1 {
            for a in 0..n1 {
                let coef = self.coeffs[space.dof(c, a, b)];
                let p = b * n1 + a;
                v += coef * lv.phi[p];
                gx += coef * lv.dx[p];
                gy += coef * lv.dy[p];
            }
        }
        Ok((v, Vec2::new(gx, gy)))
    }
}

/// Penalty parameters and quadrature orders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormParams {
    pub gamma0: f64,
    pub gamma1: f64,
    /// Points per direction for volume and boundary rules.
    pub q: usize,
}

pub const DEFAULT_GAMMA0: f64 = 800.0;

impl FormParams {
    pub fn for_degree(k: usize) -> Self {
        FormParams { gamma0: DEFAULT_GAMMA0, gamma1: 1.0 / DEFAULT_GAMMA0, q: k + 2 }
    }
}

/// Precomputed reference matrices for full cells and ghost edges.
#[derive(Clone, Debug)]
struct Reference {
    stiffness: Vec<f64>,
    /// Mass on the unit square; scale by `h^2`.
    mass: Vec<f64>,
    /// Ghost-penalty matrices (without `gamma1`) on the `2n` dofs of the two
    /// cells sharing a vertical (`[0]`) or horizontal (`[1]`) edge.
    ghost: [Vec<f64>; 2],
}

impl Reference {
    fn new(basis: &Basis1d) -> Self {
        let k = basis.k;
        let n1 = k + 1;
        let n = n1 * n1;
        let (x, w) = gauss_table(k + 1);
        let mut m1 = vec![0.0; n1 * n1];
        let mut k1 = vec![0.0; n1 * n1];
        for (t, wt) in x.iter().zip(w) {
            let v = basis.eval(*t, 0);
            let d = basis.eval(*t, 1);
            for a in 0..n1 {
                for b in 0..n1 {
                    m1[a * n1 + b] += wt * v[a] * v[b];
                    k1[a * n1 + b] += wt * d[a] * d[b];
                }
            }
        }
        let mut stiffness = vec![0.0; n * n];
        let mut mass = vec![0.0; n * n];
        for bp in 0..n1 {
            for ap in 0..n1 {
                for bq in 0..n1 {
                    for aq in 0..n1 {
                        let (p, q) = (bp * n1 + ap, bq * n1 + aq);
                        mass[p * n + q] = m1[ap * n1 + aq] * m1[bp * n1 + bq];
                        stiffness[p * n + q] = k1[ap * n1 + aq] * m1[bp * n1 + bq] + m1[ap * n1 + aq] * k1[bp * n1 + bq];
                    }
                }
            }
        }
        let mut ghost = [vec![0.0; 4 * n * n], vec![0.0; 4 * n * n]];
        for l in 1..=k {
            let at1 = basis.eval(1.0, l);
            let at0 = basis.eval(0.0, l);
            for (axis, g) in ghost.iter_mut().enumerate() {
                // jump coefficient of local dof p in the lower (side 0) or upper (side 1) cell
                let jump = |side: usize, a: usize, b: usize| -> (f64, usize) {
                    let (normal_idx, tangent_idx) = if axis == 0 { (a, b) } else { (b, a) };
                    let d = if side == 0 { at1[normal_idx] } else { -at0[normal_idx] };
                    (d, tangent_idx)
                };
                for sp in 0..2 {
                    for bp in 0..n1 {
                        for ap in 0..n1 {
                            let (dp, tp) = jump(sp, ap, bp);
                            for sq in 0..2 {
                                for bq in 0..n1 {
                                    for aq in 0..n1 {
                                        let (dq, tq) = jump(sq, aq, bq);
                                        let p = sp * n + bp * n1 + ap;
                                        let q = sq * n + bq * n1 + aq;
                                        g[p * 2 * n + q] += dp * dq * m1[tp * n1 + tq];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Reference { stiffness, mass, ghost }
    }
}

/// Everything needed to assemble on one time level: space, topology,
/// interface, active dofs and cached cut-cell quadrature.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub space: Arc<FeSpace>,
    pub topo: CutTopology,
    pub curve: MarkerCurve,
    pub active: ActiveDofs,
    pub params: FormParams,
    /// Volume and boundary rules per cut cell, aligned with `topo.cut_cells`.
    pub cut_rules: Vec<(QuadRule, BoundaryRule)>,
    reference: Arc<Reference>,
}

/// Which terms to assemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormWeights {
    pub mass: f64,
    pub stiffness: f64,
    /// Symmetric Nitsche consistency and boundary penalty.
    pub nitsche: f64,
    pub ghost: f64,
}

impl FormWeights {
    pub const BILINEAR: FormWeights = FormWeights { mass: 0.0, stiffness: 1.0, nitsche: 1.0, ghost: 1.0 };
    pub const MASS: FormWeights = FormWeights { mass: 1.0, stiffness: 0.0, nitsche: 0.0, ghost: 0.0 };

    /// `mass_coef M + A`.
    pub fn system(mass_coef: f64) -> Self {
        FormWeights { mass: mass_coef, ..Self::BILINEAR }
    }
}

impl Discretization {
    pub fn new(space: Arc<FeSpace>, topo: CutTopology, curve: MarkerCurve, params: FormParams) -> Result<Self> {
        let reference = Arc::new(Reference::new(&space.basis));
        Self::with_reference(space, topo, curve, params, reference)
    }

    fn with_reference(
        space: Arc<FeSpace>,
        topo: CutTopology,
        curve: MarkerCurve,
        params: FormParams,
        reference: Arc<Reference>,
    ) -> Result<Self> {
        let active = ActiveDofs::new(&space, &topo);
        let grid = topo.grid;
        let cut_rules = topo
            .cut_cells
            .par_iter()
            .map(|cc| {
                let (i, j) = grid.ij(cc.cell);
                let vol = cut_cell_rule(&grid.cell_square(i, j), &cc.regions, &curve, params.q)?;
                let bdr = boundary_rule(&cc.arcs, &curve, params.q)?;
                Ok((vol, bdr))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Discretization { space, topo, curve, active, params, cut_rules, reference })
    }

    /// Same space and parameters on a new topology and curve.
    pub fn rebuild(&self, topo: CutTopology, curve: MarkerCurve) -> Result<Self> {
        Self::with_reference(self.space.clone(), topo, curve, self.params, self.reference.clone())
    }

    pub fn h(&self) -> f64 {
        self.topo.grid.h
    }

    /// Volume quadrature over `Ω ∩ K` for cover cell `c` (cut rule or a
    /// tensor Gauss rule with `q` points).
    pub fn volume_rule(&self, c: usize, q: usize) -> QuadRule {
        match self.cut_slot(c) {
            Some(s) => self.cut_rules[s].0.clone(),
            None => {
                let (i, j) = self.topo.grid.ij(c);
                full_cell_rule(&self.topo.grid.cell_square(i, j), q)
            }
        }
    }

    fn cut_slot(&self, c: usize) -> Option<usize> {
        self.topo.cut_cell(c).map(|cc| {
            // cut_cells is sorted by cell index
            self.topo.cut_cells.binary_search_by_key(&cc.cell, |x| x.cell).unwrap()
        })
    }

    /// Assembles the weighted sum of mass, stiffness, Nitsche and ghost
    /// terms on the active dofs.
    pub fn assemble(&self, fw: FormWeights) -> CsrMatrix {
        let space = &self.space;
        let n = space.local_len();
        let h = self.h();
        let refm = &self.reference;
        let gamma0_h = self.params.gamma0 / h;
        let cells: Vec<(usize, Option<usize>)> = self.topo.cover.iter().map(|&c| (c, self.cut_slot(c))).collect();
        let cell_triplets: Vec<Vec<(usize, usize, f64)>> = cells
            .par_iter()
            .map(|&(c, slot)| {
                let mut local = vec![0.0; n * n];
                match slot {
                    None => {
                        let mh2 = fw.mass * h * h;
                        for p in 0..n * n {
                            local[p] = fw.stiffness * refm.stiffness[p] + mh2 * refm.mass[p];
                        }
                    }
                    Some(s) => {
                        let (vol, bdr) = &self.cut_rules[s];
                        let mut lv = LocalValues::new(space.k);
                        if fw.mass != 0.0 || fw.stiffness != 0.0 {
                            for (x, w) in vol.nodes.iter().zip(&vol.weights) {
                                space.local_eval(c, *x, &mut lv);
                                for p in 0..n {
                                    let (mp, sx, sy) = (fw.mass * w * lv.phi[p], fw.stiffness * w * lv.dx[p], fw.stiffness * w * lv.dy[p]);
                                    let row = &mut local[p * n..(p + 1) * n];
                                    for q in 0..n {
                                        row[q] += mp * lv.phi[q] + sx * lv.dx[q] + sy * lv.dy[q];
                                    }
                                }
                            }
                        }
                        if fw.nitsche != 0.0 {
                            let mut dn = vec![0.0; n];
                            for i in 0..bdr.len() {
                                let (x, w, nr) = (bdr.nodes[i], bdr.weights[i] * fw.nitsche, bdr.normals[i]);
                                space.local_eval(c, x, &mut lv);
                                for p in 0..n {
                                    dn[p] = lv.dx[p] * nr.x + lv.dy[p] * nr.y;
                                }
                                for p in 0..n {
                                    let row = &mut local[p * n..(p + 1) * n];
                                    for q in 0..n {
                                        row[q] += w * (gamma0_h * lv.phi[p] * lv.phi[q] - lv.phi[p] * dn[q] - dn[p] * lv.phi[q]);
                                    }
                                }
                            }
                        }
                    }
                }
                let dofs: Vec<usize> = space.cell_dofs(c).iter().map(|&g| self.active.local(g).unwrap()).collect();
                let mut t = Vec::with_capacity(n * n);
                for p in 0..n {
                    for q in 0..n {
                        let v = local[p * n + q];
                        if v != 0.0 {
                            t.push((dofs[p], dofs[q], v));
                        }
                    }
                }
                t
            })
            .collect();
        let mut triplets: Vec<(usize, usize, f64)> = cell_triplets.into_iter().flatten().collect();
        if fw.ghost != 0.0 {
            let scale = fw.ghost * self.params.gamma1;
            for e in &self.topo.ghost_edges {
                self.ghost_triplets(e, scale, &mut triplets);
            }
        }
        CsrMatrix::from_triplets(self.active.len(), triplets)
    }

    fn ghost_triplets(&self, e: &GridEdge, scale: f64, out: &mut Vec<(usize, usize, f64)>) {
        let n = self.space.local_len();
        let g = &self.reference.ghost[e.axis];
        let dofs: Vec<usize> =
            self.space.cell_dofs(e.lower).into_iter().chain(self.space.cell_dofs(e.upper)).map(|d| self.active.local(d).unwrap()).collect();
        for p in 0..2 * n {
            for q in 0..2 * n {
                let v = g[p * 2 * n + q];
                if v != 0.0 {
                    out.push((dofs[p], dofs[q], scale * v));
                }
            }
        }
    }

    /// `A_h` (stiffness, Nitsche and ghost penalty).
    pub fn assemble_bilinear(&self) -> CsrMatrix {
        self.assemble(FormWeights::BILINEAR)
    }

    pub fn assemble_mass(&self) -> CsrMatrix {
        self.assemble(FormWeights::MASS)
    }

    /// `∫_Ω f φ_i` over the domain, with `f` evaluated per quadrature node.
    /// Full cells use `q` points per direction. `f` may use the scratch
    /// buffer for its own evaluations.
    pub fn load_vector<F>(&self, q: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(Vec2, &mut LocalValues) -> Result<f64> + Sync,
    {
        let n = self.space.local_len();
        let per_cell: Vec<(usize, Vec<f64>)> = self
            .topo
            .cover
            .par_iter()
            .map(|&c| {
                let rule = self.volume_rule(c, q);
                let mut lv = LocalValues::new(self.space.k);
                let mut local = vec![0.0; n];
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let fx = f(*x, &mut lv)? * w;
                    if fx == 0.0 {
                        continue;
                    }
                    self.space.local_eval(c, *x, &mut lv);
                    for p in 0..n {
                        local[p] += fx * lv.phi[p];
                    }
                }
                Ok((c, local))
            })
            .collect::<Result<_>>()?;
        let mut b = vec![0.0; self.active.len()];
        for (c, local) in per_cell {
            for (p, g) in self.space.cell_dofs(c).into_iter().enumerate() {
                b[self.active.local(g).unwrap()] += local[p];
            }
        }
        Ok(b)
    }

    /// Boundary terms `∫_Γ (g_v φ_i + g_n ∂_n φ_i)` where the closure returns
    /// `(g_v, g_n)` at a boundary node with outward normal.
    fn boundary_vector(&self, g: impl Fn(Vec2, Vec2) -> (f64, f64) + Sync) -> Vec<f64> {
        let n = self.space.local_len();
        let per_cell: Vec<(usize, Vec<f64>)> = self
            .topo
            .cut_cells
            .par_iter()
            .zip(&self.cut_rules)
            .map(|(cc, (_, bdr))| {
                let mut lv = LocalValues::new(self.space.k);
                let mut local = vec![0.0; n];
                for i in 0..bdr.len() {
                    let (x, w, nr) = (bdr.nodes[i], bdr.weights[i], bdr.normals[i]);
                    let (gv, gn) = g(x, nr);
                    if gv == 0.0 && gn == 0.0 {
                        continue;
                    }
                    self.space.local_eval(cc.cell, x, &mut lv);
                    for p in 0..n {
                        local[p] += w * (gv * lv.phi[p] + gn * (lv.dx[p] * nr.x + lv.dy[p] * nr.y));
                    }
                }
                (cc.cell, local)
            })
            .collect();
        let mut b = vec![0.0; self.active.len()];
        for (c, local) in per_cell {
            for (p, gd) in self.space.cell_dofs(c).into_iter().enumerate() {
                b[self.active.local(gd).unwrap()] += local[p];
            }
        }
        b
    }

    /// Nitsche data term `∫_Γ g (γ0/h φ_i − ∂_n φ_i)`.
    pub fn assemble_dirichlet_rhs(&self, g: impl Fn(Vec2) -> f64 + Sync) -> Vec<f64> {
        let gamma0_h = self.params.gamma0 / self.h();
        self.boundary_vector(|x, _| {
            let v = g(x);
            (gamma0_h * v, -v)
        })
    }

    /// Right side `a_h(w, φ_i)` of the modified Ritz projection: the bilinear
    /// form without ghost penalty, applied to the continuous `w`.
    pub fn ritz_rhs(&self, w: impl Fn(Vec2) -> (f64, Vec2) + Sync) -> Vec<f64> {
        let n = self.space.local_len();
        let q = self.params.q;
        let per_cell: Vec<(usize, Vec<f64>)> = self
            .topo
            .cover
            .par_iter()
            .map(|&c| {
                let rule = self.volume_rule(c, q);
                let mut lv = LocalValues::new(self.space.k);
                let mut local = vec![0.0; n];
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let (_, gw) = w(*x);
                    self.space.local_eval(c, *x, &mut lv);
                    for p in 0..n {
                        local[p] += wt * (gw.x * lv.dx[p] + gw.y * lv.dy[p]);
                    }
                }
                (c, local)
            })
            .collect();
        let mut b = vec![0.0; self.active.len()];
        for (c, local) in per_cell {
            for (p, g) in self.space.cell_dofs(c).into_iter().enumerate() {
                b[self.active.local(g).unwrap()] += local[p];
            }
        }
        let gamma0_h = self.params.gamma0 / self.h();
        let bnd = self.boundary_vector(|x, nr| {
            let (v, gv) = w(x);
            (gamma0_h * v - gv.dot(nr), -v)
        });
        b.iter_mut().zip(bnd).for_each(|(a, c)| *a += c);
        b
    }

    /// Modified Ritz projection: `A_h(P w, v) = a_h(w, v)` for all `v`.
    pub fn ritz_project(&self, w: impl Fn(Vec2) -> (f64, Vec2) + Sync) -> Result<FeFunction> {
        let a = self.assemble_bilinear();
        let b = self.ritz_rhs(w);
        let (x, _) = solve(&a, &b, DEFAULT_SOLVE_TOL)?;
        Ok(FeFunction::from_active(self.space.clone(), &self.active, &x))
    }

    /// Nodal interpolant restricted to the active dofs.
    pub fn interpolate(&self, f: impl Fn(Vec2) -> f64 + Sync) -> FeFunction {
        let coeffs = (0..self.space.ndofs())
            .into_par_iter()
            .map(|g| if self.active.is_active(g) { f(self.space.dof_point(g)) } else { 0.0 })
            .collect();
        FeFunction { space: self.space.clone(), coeffs }
    }

    /// `(∫_Ω e^2, ∫_Ω |∇e|^2)` for `e = f - u_h` with `f` continuous
    /// (`f = None` measures `u_h` itself).
    pub fn error_integrals(&self, uh: &FeFunction, f: Option<&(dyn Fn(Vec2) -> (f64, Vec2) + Sync)>) -> Result<(f64, f64)> {
        let q = self.params.q;
        let parts: Vec<(f64, f64)> = self
            .topo
            .cover
            .par_iter()
            .map(|&c| {
                let rule = self.volume_rule(c, q);
                let mut lv = LocalValues::new(self.space.k);
                let (mut l2, mut h1) = (0.0, 0.0);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let (v, g) = cell_eval(uh, c, *x, &mut lv);
                    let (ev, eg) = match f {
                        Some(f) => {
                            let (fv, fg) = f(*x);
                            (fv - v, fg - g)
                        }
                        None => (v, g),
                    };
                    l2 += w * ev * ev;
                    h1 += w * eg.norm_sq();
                }
                Ok((l2, h1))
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d)))
    }

    /// `(γ0/h) ∫_Γ v^2`.
    pub fn j0(&self, v: &FeFunction) -> f64 {
        let gamma0_h = self.params.gamma0 / self.h();
        let mut lv = LocalValues::new(self.space.k);
        let mut s = 0.0;
        for (cc, (_, bdr)) in self.topo.cut_cells.iter().zip(&self.cut_rules) {
            for (x, w) in bdr.nodes.iter().zip(&bdr.weights) {
                let (val, _) = cell_eval(v, cc.cell, *x, &mut lv);
                s += w * val * val;
            }
        }
        gamma0_h * s
    }

    /// Ghost penalty `J_1(v, v)`, from the derivative jumps at Gauss points
    /// of each edge (more accurate than the quadratic form of the matrix).
    pub fn j1(&self, v: &FeFunction) -> f64 {
        let space = &self.space;
        let k = space.k;
        let n1 = k + 1;
        let (ts, ws) = gauss_table(k + 1);
        let tangent: Vec<Vec<f64>> = ts.iter().map(|&t| space.basis.eval(t, 0)).collect();
        let normal: Vec<[Vec<f64>; 2]> = (0..=k).map(|l| [space.basis.eval(1.0, l), space.basis.eval(0.0, l)]).collect();
        let mut s = 0.0;
        for e in &self.topo.ghost_edges {
            for l in 1..=k {
                for (tv, w) in tangent.iter().zip(ws) {
                    let mut jump = 0.0;
                    for (side, c) in [(0, e.lower), (1, e.upper)] {
                        let sign = if side == 0 { 1.0 } else { -1.0 };
                        for b in 0..n1 {
                            for a in 0..n1 {
                                let (ni, ti) = if e.axis == 0 { (a, b) } else { (b, a) };
                                jump += sign * v.coeffs[space.dof(c, a, b)] * normal[l][side][ni] * tv[ti];
                            }
                        }
                    }
                    s += w * jump * jump;
                }
            }
        }
        self.params.gamma1 * s
    }

    pub fn discrete_norms(&self, v: &FeFunction) -> Result<DiscreteNorms> {
        let (l2, h1) = self.error_integrals(v, None)?;
        let j0 = self.j0(v);
        let j1 = self.j1(v);
        Ok(DiscreteNorms { l2: l2.sqrt(), h1_semi: h1.sqrt(), j0, j1, triple: (h1 + j0 + j1).sqrt() })
    }
}

#[inline]
fn cell_eval(f: &FeFunction, c: usize, x: Vec2, lv: &mut LocalValues) -> (f64, Vec2) {
    let space = &f.space;
    space.local_eval(c, x, lv);
    let n1 = space.k + 1;
    let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
    for b in 0..n1 {
        for a in 0..n1 {
            let coef = f.coeffs[space.dof(c, a, b)];
            let p = b * n1 + a;
            v += coef * lv.phi[p];
            gx += coef * lv.dx[p];
            gy += coef * lv.dy[p];
        }
    }
    (v, Vec2::new(gx, gy))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscreteNorms {
    pub l2: f64,
    pub h1_semi: f64,
    /// `J_0(v, v)`.
    pub j0: f64,
    /// `J_1(v, v)`.
    pub j1: f64,
    /// `(|v|_1^2 + J_0 + J_1)^{1/2}`.
    pub triple: f64,
}
