//! Quadrature on full cells, straight edges, curved boundary arcs and the
//! cut regions `K ∩ Ω` bounded by spline arcs and cell-boundary segments.
//!
//! Cut regions are fanned into curved triangles from an interior anchor `A`;
//! each boundary piece `g(u)` spans the collapsed map
//! `(u, v) -> A + v (g(u) - A)` with Jacobian `v (g(u) - A) x g'(u)`.
//! If no anchor sees the whole boundary, the cell is split into four children
//! recursively.

use crate::error::{Error, Result};
use crate::geom::{Square, Vec2};
use crate::interface::MarkerCurve;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[0, 1]` (weights sum to one).
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

const CACHED: usize = 16;

/// Cached [`gauss_legendre`] for `q < 16`.
pub fn gauss_table(q: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    assert!((1..CACHED).contains(&q), "quadrature order {q} out of range");
    &TABLE.get_or_init(|| (0..CACHED).map(|q| if q == 0 { (vec![], vec![]) } else { gauss_legendre(q) }).collect())[q]
}

/// Area (or length) weighted nodes in physical coordinates.
#[derive(Clone, Debug, Default)]
pub struct QuadRule {
    pub nodes: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, w)| w * f(x)).sum()
    }

    fn append(&mut self, other: QuadRule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

/// Arc-length rule on the boundary with the outward unit normal at each node.
#[derive(Clone, Debug, Default)]
pub struct BoundaryRule {
    pub nodes: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub normals: Vec<Vec2>,
}

impl BoundaryRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Vec2, Vec2) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.nodes[i], self.normals[i])).sum()
    }
}

/// Tensor Gauss rule with `q` points per direction; exact for `Q_{2q-1}`.
pub fn full_cell_rule(cell: &Square, q: usize) -> QuadRule {
    let (x, w) = gauss_table(q);
    let h = cell.side;
    let mut rule = QuadRule { nodes: Vec::with_capacity(q * q), weights: Vec::with_capacity(q * q) };
    for (yj, wj) in x.iter().zip(w) {
        for (xi, wi) in x.iter().zip(w) {
            rule.nodes.push(cell.min + Vec2::new(xi * h, yj * h));
            rule.weights.push(wi * wj * h * h);
        }
    }
    rule
}

/// `q`-point Gauss rule on the straight segment `a -> b`.
pub fn edge_rule(a: Vec2, b: Vec2, q: usize) -> QuadRule {
    let (x, w) = gauss_table(q);
    let len = (b - a).norm();
    QuadRule { nodes: x.iter().map(|&t| a + (b - a) * t).collect(), weights: w.iter().map(|&wi| wi * len).collect() }
}

/// Arc-length rule on the given parameter intervals, split at knots.
pub fn boundary_rule(arcs: &[(f64, f64)], curve: &MarkerCurve, q: usize) -> Result<BoundaryRule> {
    let (x, w) = gauss_table(q);
    let mut rule = BoundaryRule::default();
    for &(a, b) in arcs {
        for (la, lb) in curve.split_at_knots(a, b) {
            let len = lb - la;
            for (t, wt) in x.iter().zip(w) {
                let cp = curve.evaluate(la + t * len)?;
                rule.nodes.push(cp.point);
                rule.weights.push(wt * len * cp.speed);
                rule.normals.push(cp.normal);
            }
        }
    }
    Ok(rule)
}

/// One boundary piece of a cut region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionPiece {
    /// Spline arc over the parameter interval, in curve direction.
    Arc { start: f64, end: f64 },
    /// Straight piece of the cell boundary.
    Line { from: Vec2, to: Vec2 },
}

/// A connected component of `K ∩ Ω`: a closed loop of arcs and straight
/// cell-boundary pieces, counter-clockwise.
#[derive(Clone, Debug)]
pub struct CutRegion {
    pub cell: (usize, usize),
    pub square: Square,
    pub pieces: Vec<RegionPiece>,
}

/// Elementary piece with a single smooth parametrisation over `u in [0, 1]`.
#[derive(Clone, Copy)]
enum Elem {
    Arc { start: f64, len: f64 },
    Line { from: Vec2, to: Vec2 },
}

impl Elem {
    #[inline]
    fn eval(&self, curve: &MarkerCurve, u: f64) -> (Vec2, Vec2) {
        match *self {
            Elem::Arc { start, len } => {
                let l = start + u * len;
                (curve.point(l), curve.derivative(l) * len)
            }
            Elem::Line { from, to } => (from + (to - from) * u, to - from),
        }
    }
}

impl CutRegion {
    fn elems(&self, curve: &MarkerCurve) -> Vec<Elem> {
        let mut out = Vec::new();
        for p in &self.pieces {
            match *p {
                RegionPiece::Arc { start, end } => {
                    for (a, b) in curve.split_at_knots(start, end) {
                        out.push(Elem::Arc { start: a, len: b - a });
                    }
                }
                RegionPiece::Line { from, to } => {
                    if (to - from).max_abs() > 0.0 {
                        out.push(Elem::Line { from, to })
                    }
                }
            }
        }
        out
    }

    /// Moments `(area, int x, int y)` by Green's theorem; exact for the
    /// piecewise-cubic boundary.
    pub fn moments(&self, curve: &MarkerCurve) -> (f64, Vec2) {
        let (x, w) = gauss_table(5);
        let mut area = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for e in self.elems(curve) {
            for (u, wu) in x.iter().zip(w) {
                let (p, d) = e.eval(curve, *u);
                area += wu * 0.5 * p.cross(d);
                mx += wu * 0.5 * p.x * p.x * d.y;
                my -= wu * 0.5 * p.y * p.y * d.x;
            }
        }
        (area, Vec2::new(mx, my))
    }

    pub fn area(&self, curve: &MarkerCurve) -> f64 {
        self.moments(curve).0
    }

    fn anchor_candidates(&self, curve: &MarkerCurve) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(3);
        let (area, m) = self.moments(curve);
        if area > 0.0 {
            out.push(m * (1.0 / area));
        }
        let mut sum = Vec2::ZERO;
        let mut count = 0.0;
        for p in &self.pieces {
            match *p {
                RegionPiece::Arc { start, end } => sum += curve.point(0.5 * (start + end)),
                RegionPiece::Line { from, .. } => sum += from,
            }
            count += 1.0;
        }
        if count > 0.0 {
            out.push(sum * (1.0 / count));
        }
        out
    }
}

/// Fan rule for one region from the first anchor that sees every boundary
/// piece with non-negative orientation.
pub fn region_rule(region: &CutRegion, curve: &MarkerCurve, q: usize) -> Result<QuadRule> {
    let elems = region.elems(curve);
    let scale = region.square.side * region.square.side;
    for anchor in region.anchor_candidates(curve) {
        if let Some(rule) = fan_rule(&elems, anchor, curve, q, scale) {
            return Ok(rule);
        }
    }
    Err(Error::Decomposition { cell: region.cell })
}

fn fan_rule(elems: &[Elem], anchor: Vec2, curve: &MarkerCurve, q: usize, scale: f64) -> Option<QuadRule> {
    let (x, w) = gauss_table(q);
    let neg_tol = -1e-13 * scale;
    let zero_tol = 1e-13 * scale;
    let mut rule = QuadRule::default();
    const PROBES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    for e in elems {
        let mut max_cross: f64 = 0.0;
        for &u in PROBES.iter().chain(x.iter()) {
            let (p, d) = e.eval(curve, u);
            let c = (p - anchor).cross(d);
            if c < neg_tol {
                return None;
            }
            max_cross = max_cross.max(c.abs());
        }
        if max_cross <= zero_tol {
            continue;
        }
        for (u, wu) in x.iter().zip(w) {
            let (p, d) = e.eval(curve, *u);
            let r = p - anchor;
            let c = r.cross(d);
            if c <= 0.0 {
                continue;
            }
            for (v, wv) in x.iter().zip(w) {
                rule.nodes.push(anchor + r * *v);
                rule.weights.push(wu * wv * v * c);
            }
        }
    }
    Some(rule)
}

fn signed_fan_rule(elems: &[Elem], anchor: Vec2, curve: &MarkerCurve, q: usize) -> QuadRule {
    let (x, w) = gauss_table(q);
    let mut rule = QuadRule::default();
    for e in elems {
        for (u, wu) in x.iter().zip(w) {
            let (p, d) = e.eval(curve, *u);
            let r = p - anchor;
            let c = r.cross(d);
            for (v, wv) in x.iter().zip(w) {
                rule.nodes.push(anchor + r * *v);
                rule.weights.push(wu * wv * v * c);
            }
        }
    }
    rule
}

pub const MAX_SUBDIVISION_DEPTH: usize = 6;

/// Rule for all of `K ∩ Ω` in one cut cell, given its regions. Falls back to
/// recursive quadtree subdivision when a region is not star-shaped with
/// respect to any anchor candidate.
pub fn cut_cell_rule(square: &Square, regions: &[CutRegion], curve: &MarkerCurve, q: usize) -> Result<QuadRule> {
    let cell = regions.first().map(|r| r.cell).unwrap_or((0, 0));
    let mut rule = QuadRule::default();
    let mut ok = true;
    for region in regions {
        match region_rule(region, curve, q) {
            Ok(r) => rule.append(r),
            Err(_) => {
                ok = false;
                break;
            }
        }
    }
    if ok {
        return Ok(rule);
    }
    let mut rule = QuadRule::default();
    for child in square.children() {
        subdivided_rule(&child, cell, curve, q, 1, &mut rule)?;
    }
    Ok(rule)
}

fn subdivided_rule(square: &Square, cell: (usize, usize), curve: &MarkerCurve, q: usize, depth: usize, out: &mut QuadRule) -> Result<()> {
    let arcs = curve.cell_intersections(square);
    if arcs.is_empty() {
        if curve.point_inside(square.center()) {
            out.append(full_cell_rule(square, q));
        }
        return Ok(());
    }
    let regions = build_regions(cell, square, &arcs, curve)?;
    let mut local = QuadRule::default();
    let mut ok = true;
    for region in &regions {
        if region.area(curve) <= 1e-14 * square.side * square.side {
            continue;
        }
        match region_rule(region, curve, q) {
            Ok(r) => local.append(r),
            Err(_) => {
                ok = false;
                break;
            }
        }
    }
    if ok {
        out.append(local);
        return Ok(());
    }
    if depth >= MAX_SUBDIVISION_DEPTH {
        // Leaf fallback: the fan from the leaf centre with signed weights is
        // still exact for polynomials, it only loses positivity.
        for region in &regions {
            let elems = region.elems(curve);
            out.append(signed_fan_rule(&elems, square.center(), curve, q));
        }
        return Ok(());
    }
    for child in square.children() {
        subdivided_rule(&child, cell, curve, q, depth + 1, out)?;
    }
    Ok(())
}

/// Assembles the closed boundary loops of `square ∩ Ω` from the curve arcs
/// lying in the square. Each arc is followed in curve direction; from its
/// exit point the square boundary is walked counter-clockwise to the next
/// arc entry.
pub fn build_regions(cell: (usize, usize), square: &Square, arcs: &[(f64, f64)], curve: &MarkerCurve) -> Result<Vec<CutRegion>> {
    let period = curve.period();
    if let [(a, b)] = arcs {
        if b - a >= period * (1.0 - 1e-12) {
            return Ok(vec![CutRegion { cell, square: *square, pieces: vec![RegionPiece::Arc { start: *a, end: *b }] }]);
        }
    }
    let perim = 4.0 * square.side;
    let sig_in: Vec<f64> = arcs.iter().map(|&(a, _)| square.perimeter_coord(curve.point(a))).collect();
    let sig_out: Vec<f64> = arcs.iter().map(|&(_, b)| square.perimeter_coord(curve.point(b))).collect();
    let mut used = vec![false; arcs.len()];
    let mut regions = Vec::new();
    for first in 0..arcs.len() {
        if used[first] {
            continue;
        }
        let mut pieces = Vec::new();
        let mut cur = first;
        loop {
            used[cur] = true;
            pieces.push(RegionPiece::Arc { start: arcs[cur].0, end: arcs[cur].1 });
            let s_out = sig_out[cur];
            let mut best: Option<(usize, f64)> = None;
            for (b, &s_in) in sig_in.iter().enumerate() {
                let mut d = (s_in - s_out).rem_euclid(perim);
                if d > perim - 1e-12 * square.side {
                    d = 0.0;
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((b, d));
                }
            }
            let (next, dist) = best.expect("at least one arc");
            let from = curve.point(arcs[cur].1);
            let to = curve.point(arcs[next].0);
            let mut p = from;
            // corners strictly between exit and entry, walking counter-clockwise
            let mut corner = (s_out / square.side).floor() + 1.0;
            while corner * square.side < s_out + dist - 1e-14 * square.side {
                let c = square.perimeter_point(corner * square.side);
                pieces.push(RegionPiece::Line { from: p, to: c });
                p = c;
                corner += 1.0;
            }
            if (to - p).max_abs() > 0.0 {
                pieces.push(RegionPiece::Line { from: p, to });
            }
            if next == first {
                break;
            }
            if used[next] {
                return Err(Error::Decomposition { cell });
            }
            cur = next;
        }
        regions.push(CutRegion { cell, square: *square, pieces });
    }
    Ok(regions)
}
