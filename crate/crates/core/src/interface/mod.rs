//! Boundary tracking with markers and a periodic cubic spline.
//!
//! The boundary at each time level is a closed, counter-clockwise curve
//! `chi(l)`, `l in [0, L)`, interpolating markers `p_j` at uniform knots
//! `L_j = j * eta`. Per coordinate the spline second derivatives `alpha_j`
//! solve the cyclic system `alpha_{j-1}/2 + 2 alpha_j + alpha_{j+1}/2 = d_j`
//! with `d_j = 3 (p_{j+1} + p_{j-1} - 2 p_j) / eta^2`.

pub mod roots;
pub mod tridiag;

use crate::error::{Error, Result};
use crate::flowmap::{FlowMap, VelocityField};
use crate::geom::{Square, Vec2};
use crate::quadrature::gauss_legendre;
use roots::cubic_roots;
use std::io::Write;

/// Golden-ratio ray angle used when the horizontal ray is ambiguous.
fn fallback_ray_angles() -> [f64; 3] {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    [1f64.atan2(phi), phi.atan2(1.0) + 0.1, 2.0f64.sqrt().atan2(-1.0)]
}

/// One cubic piece in the local parameter `s in [0, eta]`.
#[derive(Clone, Copy, Debug)]
pub struct CubicSegment {
    pub coef: [Vec2; 4],
    /// Exact bounding box.
    pub lo: Vec2,
    pub hi: Vec2,
}

impl CubicSegment {
    #[inline]
    pub fn point(&self, s: f64) -> Vec2 {
        let c = &self.coef;
        ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> Vec2 {
        let c = &self.coef;
        (c[3] * (3.0 * s) + c[2] * 2.0) * s + c[1]
    }

    #[inline]
    pub fn second_derivative(&self, s: f64) -> Vec2 {
        self.coef[3] * (6.0 * s) + self.coef[2] * 2.0
    }

    /// Coefficients of `n . chi(s) - offset`.
    #[inline]
    pub fn line_coeffs(&self, n: Vec2, offset: f64) -> [f64; 4] {
        let c = &self.coef;
        [c[0].dot(n) - offset, c[1].dot(n), c[2].dot(n), c[3].dot(n)]
    }

    #[inline]
    pub fn axis_coeffs(&self, axis: usize, value: f64) -> [f64; 4] {
        let c = &self.coef;
        [c[0].component(axis) - value, c[1].component(axis), c[2].component(axis), c[3].component(axis)]
    }

    fn with_bbox(coef: [Vec2; 4], eta: f64) -> Self {
        let mut seg = CubicSegment { coef, lo: coef[0], hi: coef[0] };
        let grow = |p: Vec2, seg: &mut CubicSegment| {
            seg.lo = Vec2::new(seg.lo.x.min(p.x), seg.lo.y.min(p.y));
            seg.hi = Vec2::new(seg.hi.x.max(p.x), seg.hi.y.max(p.y));
        };
        let end = seg.point(eta);
        grow(end, &mut seg);
        for axis in 0..2 {
            let d = [coef[1].component(axis), 2.0 * coef[2].component(axis), 3.0 * coef[3].component(axis), 0.0];
            for &s in cubic_roots(&d, 0.0, eta, 0.0).as_slice() {
                let p = seg.point(s);
                grow(p, &mut seg);
            }
        }
        seg
    }

    fn boxes_overlap(&self, other: &CubicSegment, tol: f64) -> bool {
        self.lo.x <= other.hi.x + tol && other.lo.x <= self.hi.x + tol && self.lo.y <= other.hi.y + tol && other.lo.y <= self.hi.y + tol
    }
}

/// Position, derivative, outward unit normal and speed at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub speed: f64,
}

/// A maximal parameter interval `[start, end]` of the curve lying in one grid
/// cell. `end` may exceed the period when the interval wraps through `l = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellArc {
    pub cell: (usize, usize),
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug)]
pub struct MarkerCurve {
    markers: Vec<Vec2>,
    eta: f64,
    alpha: Vec<Vec2>,
    segments: Vec<CubicSegment>,
    time_index: usize,
}

impl MarkerCurve {
    /// Periodic cubic spline through `markers` (the closing marker is implied)
    /// with uniform knot spacing `eta`.
    pub fn new(markers: Vec<Vec2>, eta: f64) -> Result<Self> {
        let nm = markers.len();
        if nm < 4 {
            return Err(Error::DegenerateCurve(format!("{nm} markers; at least 4 required")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::DegenerateCurve(format!("knot spacing {eta}")));
        }
        if markers.iter().any(|p| !p.is_finite()) {
            return Err(Error::DegenerateCurve("non-finite marker".into()));
        }
        let inv_eta2 = 1.0 / (eta * eta);
        let rhs: Vec<Vec2> = (0..nm)
            .map(|j| {
                let prev = markers[(j + nm - 1) % nm];
                let next = markers[(j + 1) % nm];
                (next + prev - markers[j] * 2.0) * (3.0 * inv_eta2)
            })
            .collect();
        let ax = tridiag::solve_periodic_constant(0.5, 2.0, &rhs.iter().map(|d| d.x).collect::<Vec<_>>());
        let ay = tridiag::solve_periodic_constant(0.5, 2.0, &rhs.iter().map(|d| d.y).collect::<Vec<_>>());
        let alpha: Vec<Vec2> = ax.into_iter().zip(ay).map(|(x, y)| Vec2::new(x, y)).collect();
        let scale = rhs.iter().map(|d| d.max_abs()).fold(1.0, f64::max);
        let residual = (0..nm)
            .map(|j| {
                let r = alpha[(j + nm - 1) % nm] * 0.5 + alpha[j] * 2.0 + alpha[(j + 1) % nm] * 0.5 - rhs[j];
                r.max_abs()
            })
            .fold(0.0, f64::max);
        assert!(residual <= 1e-10 * scale, "spline system residual {residual:e}");
        let segments = (0..nm)
            .map(|j| {
                let (p0, p1) = (markers[j], markers[(j + 1) % nm]);
                let (a0, a1) = (alpha[j], alpha[(j + 1) % nm]);
                let coef = [p0, (p1 - p0) * (1.0 / eta) - (a0 * 2.0 + a1) * (eta / 6.0), a0 * 0.5, (a1 - a0) * (1.0 / (6.0 * eta))];
                CubicSegment::with_bbox(coef, eta)
            })
            .collect();
        Ok(MarkerCurve { markers, eta, alpha, segments, time_index: 0 })
    }

    /// Markers `f(j / count)` for `j = 0..count` with the given knot spacing.
    pub fn from_fn(count: usize, eta: f64, f: impl Fn(f64) -> Vec2) -> Result<Self> {
        let markers = (0..count).map(|j| f(j as f64 / count as f64)).collect();
        Self::new(markers, eta)
    }

    /// Counter-clockwise circle with knots spaced by exact arc length.
    pub fn circle(center: Vec2, radius: f64, count: usize) -> Result<Self> {
        let eta = 2.0 * std::f64::consts::PI * radius / count as f64;
        Self::from_fn(count, eta, |u| {
            let (s, c) = (2.0 * std::f64::consts::PI * u).sin_cos();
            center + Vec2::new(radius * c, radius * s)
        })
    }

    pub fn with_time_index(mut self, n: usize) -> Self {
        self.time_index = n;
        self
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn markers(&self) -> &[Vec2] {
        &self.markers
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Spline second derivatives at the knots.
    pub fn alpha(&self) -> &[Vec2] {
        &self.alpha
    }

    pub fn segments(&self) -> &[CubicSegment] {
        &self.segments
    }

    /// Total parameter length `L = J eta`.
    pub fn period(&self) -> f64 {
        self.markers.len() as f64 * self.eta
    }

    pub fn knot(&self, j: usize) -> f64 {
        j as f64 * self.eta
    }

    /// Segment index and local parameter of `l` (taken modulo the period).
    #[inline]
    pub fn locate(&self, l: f64) -> (usize, f64) {
        let l = l.rem_euclid(self.period());
        let j = ((l / self.eta) as usize).min(self.markers.len() - 1);
        (j, l - self.knot(j))
    }

    #[inline]
    pub fn point(&self, l: f64) -> Vec2 {
        let (j, s) = self.locate(l);
        self.segments[j].point(s)
    }

    #[inline]
    pub fn derivative(&self, l: f64) -> Vec2 {
        let (j, s) = self.locate(l);
        self.segments[j].derivative(s)
    }

    pub fn evaluate(&self, l: f64) -> Result<CurvePoint> {
        let (j, s) = self.locate(l);
        let seg = &self.segments[j];
        let point = seg.point(s);
        let tangent = seg.derivative(s);
        let speed = tangent.norm();
        if speed < 1e-12 {
            return Err(Error::DegenerateParametrization { l, speed });
        }
        Ok(CurvePoint { point, tangent, normal: tangent.perp_cw() * (1.0 / speed), speed })
    }

    /// Bounding box of the whole curve.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        self.segments
            .iter()
            .fold((Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)), |(lo, hi), s| {
                (Vec2::new(lo.x.min(s.lo.x), lo.y.min(s.lo.y)), Vec2::new(hi.x.max(s.hi.x), hi.y.max(s.hi.y)))
            })
    }

    /// Signed enclosed area (positive for counter-clockwise curves). Exact up
    /// to rounding: the integrand `x y' - y x'` is a quintic per segment.
    pub fn signed_area(&self) -> f64 {
        let (nodes, weights) = gauss_legendre(3);
        let mut a = 0.0;
        for seg in &self.segments {
            for (u, w) in nodes.iter().zip(&weights) {
                let s = u * self.eta;
                a += w * seg.point(s).cross(seg.derivative(s));
            }
        }
        0.5 * a * self.eta
    }

    pub fn arc_length(&self) -> f64 {
        let (nodes, weights) = gauss_legendre(8);
        self.segments
            .iter()
            .map(|seg| nodes.iter().zip(&weights).map(|(u, w)| w * seg.derivative(u * self.eta).norm()).sum::<f64>())
            .sum::<f64>()
            * self.eta
    }

    /// Splits `[a, b]` at knots; each piece lies in one segment.
    pub fn split_at_knots(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut lo = a;
        let tol = 1e-12 * self.eta;
        while lo < b - tol {
            let next_knot = ((lo + tol) / self.eta).floor() * self.eta + self.eta;
            let hi = next_knot.min(b);
            if hi - lo > tol {
                out.push((lo, hi));
            }
            lo = hi;
        }
        out
    }

    /// Number of crossings of the ray `x0 + t dir, t > 0`, or `None` when the
    /// ray passes within tolerance of a knot or is tangent to the curve.
    fn ray_crossings(&self, x0: Vec2, dir: Vec2) -> Option<usize> {
        let nrm = Vec2::new(-dir.y, dir.x);
        let zero_tol = 1e-13 * (1.0 + x0.max_abs());
        let mut count = 0;
        for seg in &self.segments {
            let corners = [seg.lo, Vec2::new(seg.hi.x, seg.lo.y), Vec2::new(seg.lo.x, seg.hi.y), seg.hi];
            let (mut gmin, mut gmax, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for c in corners {
                let g = nrm.dot(c - x0);
                gmin = gmin.min(g);
                gmax = gmax.max(g);
                fmax = fmax.max(dir.dot(c - x0));
            }
            if gmin > zero_tol || gmax < -zero_tol || fmax < -zero_tol {
                continue;
            }
            let coeffs = seg.line_coeffs(nrm, nrm.dot(x0));
            let r = cubic_roots(&coeffs, 0.0, self.eta, zero_tol);
            if r.tangent {
                return None;
            }
            for &s in r.as_slice() {
                if s < 1e-12 * self.eta || s > self.eta * (1.0 - 1e-12) {
                    return None;
                }
                let along = dir.dot(seg.point(s) - x0);
                if along.abs() <= 1e-12 {
                    return None;
                }
                if along > 0.0 {
                    count += 1;
                }
            }
        }
        Some(count)
    }

    /// Crossing-parity inside test for the closed curve.
    pub fn point_inside(&self, x: Vec2) -> bool {
        if let Some(c) = self.ray_crossings(x, Vec2::new(1.0, 0.0)) {
            return c % 2 == 1;
        }
        for theta in fallback_ray_angles() {
            let (s, c) = theta.sin_cos();
            if let Some(n) = self.ray_crossings(x, Vec2::new(c, s)) {
                return n % 2 == 1;
            }
        }
        self.winding_number_dense(x).abs() > 0.5
    }

    fn winding_number_dense(&self, x: Vec2) -> f64 {
        let n = 64 * self.len();
        let period = self.period();
        let mut total = 0.0;
        let mut prev = self.point(0.0) - x;
        for i in 1..=n {
            let cur = self.point(period * i as f64 / n as f64) - x;
            total += prev.cross(cur).atan2(prev.dot(cur));
            prev = cur;
        }
        total / (2.0 * std::f64::consts::PI)
    }

    /// Sorted x-coordinates where the curve crosses the horizontal line
    /// `y = y0`, or `None` if the line hits a knot or touches tangentially.
    pub fn horizontal_crossings(&self, y0: f64) -> Option<Vec<f64>> {
        let zero_tol = 1e-13 * (1.0 + y0.abs());
        let mut xs = Vec::new();
        for seg in &self.segments {
            if seg.lo.y > y0 + zero_tol || seg.hi.y < y0 - zero_tol {
                continue;
            }
            let r = cubic_roots(&seg.axis_coeffs(1, y0), 0.0, self.eta, zero_tol);
            if r.tangent {
                return None;
            }
            for &s in r.as_slice() {
                if s < 1e-12 * self.eta || s > self.eta * (1.0 - 1e-12) {
                    return None;
                }
                xs.push(seg.point(s).x);
            }
        }
        xs.sort_by(f64::total_cmp);
        Some(xs)
    }

    /// Maximal parameter intervals whose image lies in the closed `cell`,
    /// sorted by start. Pieces shorter than `1e-12 L` are dropped.
    pub fn cell_intersections(&self, cell: &Square) -> Vec<(f64, f64)> {
        let tol = 1e-12 * cell.side;
        let max = cell.max();
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        let mut breaks = Vec::with_capacity(16);
        for (j, seg) in self.segments.iter().enumerate() {
            if seg.lo.x > max.x + tol || seg.hi.x < cell.min.x - tol || seg.lo.y > max.y + tol || seg.hi.y < cell.min.y - tol {
                continue;
            }
            breaks.clear();
            breaks.push(0.0);
            for (axis, v) in [(0, cell.min.x), (0, max.x), (1, cell.min.y), (1, max.y)] {
                breaks.extend_from_slice(cubic_roots(&seg.axis_coeffs(axis, v), 0.0, self.eta, 0.0).as_slice());
            }
            breaks.push(self.eta);
            breaks.sort_by(f64::total_cmp);
            for w in breaks.windows(2) {
                if w[1] - w[0] <= 1e-14 * self.eta {
                    continue;
                }
                if cell.contains(seg.point(0.5 * (w[0] + w[1])), tol) {
                    let a = self.knot(j) + w[0];
                    let b = if w[1] >= self.eta { self.knot(j + 1) } else { self.knot(j) + w[1] };
                    pieces.push((a, b));
                }
            }
        }
        let period = self.period();
        let mut merged = merge_contiguous(pieces.into_iter().map(|(a, b)| ((0, 0), a, b)), period, self.eta);
        merged.retain(|a| a.end - a.start >= 1e-12 * period);
        let mut out: Vec<(f64, f64)> = merged.into_iter().map(|a| (a.start, a.end)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Decomposes the curve into per-cell arcs of the uniform grid with
    /// lower-left corner `origin`, cell size `h` and `nx x ny` cells.
    ///
    /// Pieces running along a grid line are assigned to the cell on the
    /// interior side of the curve. Arcs shorter than `1e-12 L` are dropped.
    pub fn grid_arcs(&self, origin: Vec2, h: f64, nx: usize, ny: usize) -> Vec<CellArc> {
        let mut pieces: Vec<((usize, usize), f64, f64)> = Vec::new();
        let mut breaks: Vec<f64> = Vec::with_capacity(32);
        let line_tol = 1e-12 * h;
        for (j, seg) in self.segments.iter().enumerate() {
            breaks.clear();
            breaks.push(0.0);
            for axis in 0..2 {
                let (o, lo, hi) = (origin.component(axis), seg.lo.component(axis), seg.hi.component(axis));
                let first = ((lo - o) / h).ceil() as i64;
                let last = ((hi - o) / h).floor() as i64;
                for g in first..=last {
                    let v = o + g as f64 * h;
                    breaks.extend_from_slice(cubic_roots(&seg.axis_coeffs(axis, v), 0.0, self.eta, 0.0).as_slice());
                }
            }
            breaks.push(self.eta);
            breaks.sort_by(f64::total_cmp);
            for w in breaks.windows(2) {
                if w[1] - w[0] <= 1e-14 * self.eta {
                    continue;
                }
                let sm = 0.5 * (w[0] + w[1]);
                let mut m = seg.point(sm);
                let rel = (m - origin) * (1.0 / h);
                let on_line = |v: f64| (v - v.round()).abs() * h <= line_tol;
                if on_line(rel.x) || on_line(rel.y) {
                    let t = seg.derivative(sm);
                    let inward = Vec2::new(-t.y, t.x) * (1.0 / t.norm().max(f64::MIN_POSITIVE));
                    m += inward * (1e-6 * h);
                }
                let ci = ((m.x - origin.x) / h).floor();
                let cj = ((m.y - origin.y) / h).floor();
                if ci < 0.0 || cj < 0.0 || ci >= nx as f64 || cj >= ny as f64 {
                    continue;
                }
                let a = self.knot(j) + w[0];
                let b = if w[1] >= self.eta { self.knot(j + 1) } else { self.knot(j) + w[1] };
                pieces.push(((ci as usize, cj as usize), a, b));
            }
        }
        let period = self.period();
        let mut arcs = merge_contiguous(pieces.into_iter(), period, self.eta);
        arcs.retain(|a| a.end - a.start >= 1e-12 * period);
        arcs
    }

    /// Advects every marker over sub-step `time_index -> time_index + 1` and
    /// rebuilds the spline on the same knots.
    pub fn track_step<F: VelocityField + ?Sized>(&self, flow: &FlowMap<'_, F>) -> Result<MarkerCurve> {
        let n = self.time_index;
        let moved = self.markers.iter().map(|&p| flow.step(p, n)).collect::<Result<Vec<_>>>()?;
        let next = MarkerCurve::new(moved, self.eta)?.with_time_index(n + 1);
        if cfg!(debug_assertions) {
            next.check_simple()?;
        }
        Ok(next)
    }

    /// Pairwise test of non-adjacent segments for intersections, on
    /// 16-chord polylines of each segment.
    pub fn check_simple(&self) -> Result<()> {
        let nm = self.len();
        let tol = 1e-14;
        let mut order: Vec<usize> = (0..nm).collect();
        order.sort_by(|&a, &b| self.segments[a].lo.x.total_cmp(&self.segments[b].lo.x));
        for (oi, &i) in order.iter().enumerate() {
            let si = &self.segments[i];
            for &j in &order[oi + 1..] {
                let sj = &self.segments[j];
                if sj.lo.x > si.hi.x + tol {
                    break;
                }
                let adjacent = (i + 1) % nm == j || (j + 1) % nm == i;
                if adjacent || !si.boxes_overlap(sj, tol) {
                    continue;
                }
                if self.segments_cross(si, sj) {
                    return Err(Error::Topology { first: i.min(j), second: i.max(j) });
                }
            }
        }
        Ok(())
    }

    fn segments_cross(&self, a: &CubicSegment, b: &CubicSegment) -> bool {
        const N: usize = 16;
        let pa: Vec<Vec2> = (0..=N).map(|i| a.point(self.eta * i as f64 / N as f64)).collect();
        let pb: Vec<Vec2> = (0..=N).map(|i| b.point(self.eta * i as f64 / N as f64)).collect();
        for u in pa.windows(2) {
            for v in pb.windows(2) {
                if chords_intersect(u[0], u[1], v[0], v[1]) {
                    return true;
                }
            }
        }
        false
    }

    /// Inserts markers on long chords and removes markers on short chords so
    /// that all chords lie in `[eta_min, eta_max]`, then re-uniformises the
    /// knots. Returns the curve unchanged when it already satisfies the bounds.
    pub fn redistribute(&self, eta_min: f64, eta_max: f64) -> Result<MarkerCurve> {
        assert!(eta_min < eta_max);
        let nm = self.len();
        let chord = |a: Vec2, b: Vec2| (b - a).norm();
        let ok = (0..nm).all(|j| {
            let c = chord(self.markers[j], self.markers[(j + 1) % nm]);
            c >= eta_min && c <= eta_max
        });
        if ok {
            return Ok(self.clone());
        }

        // insertion by parameter bisection on the current spline
        let mut pts: Vec<Vec2> = Vec::with_capacity(nm + 16);
        for j in 0..nm {
            pts.push(self.markers[j]);
            let (a, b) = (self.knot(j), self.knot(j + 1));
            self.bisect_into(a, self.markers[j], b, self.markers[(j + 1) % nm], eta_max, 0, &mut pts);
        }

        // removal: repeatedly fix the shortest chord
        let mut stuck = vec![false; pts.len()];
        loop {
            let m = pts.len();
            if m <= 4 {
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                let c = chord(pts[i], pts[(i + 1) % m]);
                if c < eta_min && !stuck[i] && best.is_none_or(|(_, bc)| c < bc) {
                    best = Some((i, c));
                }
            }
            let Some((i, _)) = best else { break };
            let prev = pts[(i + m - 1) % m];
            let next2 = pts[(i + 2) % m];
            let drop_i = chord(prev, pts[(i + 1) % m]);
            let drop_next = chord(pts[i], next2);
            let mut choices = [(drop_i, i), (drop_next, (i + 1) % m)];
            if choices[1].0 < choices[0].0 {
                choices.swap(0, 1);
            }
            match choices.iter().find(|(c, _)| *c <= eta_max) {
                Some(&(_, victim)) => {
                    pts.remove(victim);
                    stuck.remove(victim);
                    stuck.iter_mut().for_each(|s| *s = false);
                }
                None => stuck[i] = true,
            }
        }
        let m = pts.len();
        if m < 4 {
            return Err(Error::DegenerateCurve(format!("redistribution left {m} markers")));
        }
        let bad = (0..m).find(|&i| {
            let c = chord(pts[i], pts[(i + 1) % m]);
            !(eta_min..=eta_max).contains(&c)
        });
        if let Some(i) = bad {
            return Err(Error::DegenerateCurve(format!(
                "cannot bring chord {i} ({:.3e}) into [{eta_min:.3e}, {eta_max:.3e}]",
                chord(pts[i], pts[(i + 1) % m])
            )));
        }
        let eta = self.arc_length() / m as f64;
        Ok(MarkerCurve::new(pts, eta)?.with_time_index(self.time_index))
    }

    #[allow(clippy::too_many_arguments)]
    fn bisect_into(&self, a: f64, pa: Vec2, b: f64, pb: Vec2, eta_max: f64, depth: usize, out: &mut Vec<Vec2>) {
        if (pb - pa).norm() <= eta_max || depth >= 20 {
            return;
        }
        let mid = 0.5 * (a + b);
        let pm = self.point(mid);
        self.bisect_into(a, pa, mid, pm, eta_max, depth + 1, out);
        out.push(pm);
        self.bisect_into(mid, pm, b, pb, eta_max, depth + 1, out);
    }

    /// Dense polyline sampling as `l,x,y` CSV rows.
    pub fn write_csv<W: Write>(&self, mut w: W, per_interval: usize) -> std::io::Result<()> {
        writeln!(w, "l,x,y")?;
        let n = per_interval.max(1) * self.len();
        let period = self.period();
        for i in 0..=n {
            let l = period * i as f64 / n as f64;
            let p = self.point(l);
            writeln!(w, "{l:.16e},{:.16e},{:.16e}", p.x, p.y)?;
        }
        Ok(())
    }

    /// Dense polygon vertices (for oracles and plotting).
    pub fn sample_polygon(&self, count: usize) -> Vec<Vec2> {
        let period = self.period();
        (0..count).map(|i| self.point(period * i as f64 / count as f64)).collect()
    }
}

/// Merges consecutive pieces of the same cell whose parameter ranges touch,
/// including the wrap from the last piece back to the first.
fn merge_contiguous(pieces: impl Iterator<Item = ((usize, usize), f64, f64)>, period: f64, eta: f64) -> Vec<CellArc> {
    let tol = 1e-12 * eta;
    let mut out: Vec<CellArc> = Vec::new();
    for (cell, a, b) in pieces {
        if let Some(last) = out.last_mut() {
            if last.cell == cell && (a - last.end).abs() <= tol {
                last.end = b;
                continue;
            }
        }
        out.push(CellArc { cell, start: a, end: b });
    }
    if out.len() >= 2 {
        let first = out[0];
        let last = out[out.len() - 1];
        if first.cell == last.cell && first.start.abs() <= tol && (last.end - period).abs() <= tol {
            out.pop();
            out[0] = CellArc { cell: first.cell, start: last.start, end: period + first.end };
        }
    }
    out
}

fn chords_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Simple polygon inside test (crossing parity); used as an oracle.
pub fn polygon_contains(poly: &[Vec2], x: Vec2) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > x.y) != (b.y > x.y) && x.x < (b.x - a.x) * (x.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>()
}
