//! Fixed Cartesian background grid and the per-step cut topology: cover,
//! cut cells with their regions, ghost edges and the fictitious boundary.

use crate::error::{Error, Result};
use crate::geom::{Square, Vec2};
use crate::interface::MarkerCurve;
use crate::quadrature::{build_regions, CutRegion};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;

/// Uniform `nx x ny` grid of square cells with lower-left corner `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub origin: Vec2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// Square domain `[origin, origin + side]^2` with `side / h` cells per
    /// direction; `side / h` must be an integer (to 1e-9 relative).
    pub fn square(origin: Vec2, side: f64, h: f64) -> Result<Self> {
        let n = side / h;
        let nr = n.round();
        if !(h > 0.0) || nr < 1.0 || (n - nr).abs() > 1e-9 * n {
            return Err(Error::Config(format!("domain side {side} is not a multiple of h = {h}")));
        }
        Ok(Grid { origin, h, nx: nr as usize, ny: nr as usize })
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    #[inline]
    pub fn cell_square(&self, i: usize, j: usize) -> Square {
        Square::new(self.origin + Vec2::new(i as f64 * self.h, j as f64 * self.h), self.h)
    }

    pub fn max(&self) -> Vec2 {
        self.origin + Vec2::new(self.nx as f64 * self.h, self.ny as f64 * self.h)
    }

    /// Cell containing `x` (cells are closed on the upper side at the domain
    /// boundary), or `None` outside the grid.
    pub fn locate(&self, x: Vec2) -> Option<(usize, usize)> {
        let r = (x - self.origin) * (1.0 / self.h);
        let fit = |v: f64, n: usize| -> Option<usize> {
            if !(v >= 0.0 && v <= n as f64) {
                return None;
            }
            Some((v.floor() as usize).min(n - 1))
        };
        Some((fit(r.x, self.nx)?, fit(r.y, self.ny)?))
    }

    /// Neighbours of cell `c` as `(direction, neighbour)`; directions are
    /// 0 = +x, 1 = +y, 2 = -x, 3 = -y.
    pub fn neighbors(&self, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = self.ij(c);
        let cand = [
            (i + 1 < self.nx).then(|| self.index(i + 1, j)),
            (j + 1 < self.ny).then(|| self.index(i, j + 1)),
            (i > 0).then(|| self.index(i - 1, j)),
            (j > 0).then(|| self.index(i, j - 1)),
        ];
        cand.into_iter().enumerate().filter_map(|(d, n)| n.map(|n| (d, n)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellKind {
    Outside,
    Interior,
    Cut,
}

/// Interior edge between two horizontally (`axis = 0`, the edge is vertical)
/// or vertically (`axis = 1`) adjacent cells; `lower` has the smaller index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GridEdge {
    pub lower: usize,
    pub upper: usize,
    pub axis: usize,
}

impl GridEdge {
    pub fn endpoints(&self, grid: &Grid) -> (Vec2, Vec2) {
        let (i, j) = grid.ij(self.upper);
        let p = grid.origin + Vec2::new(i as f64 * grid.h, j as f64 * grid.h);
        if self.axis == 0 {
            (p, p + Vec2::new(0.0, grid.h))
        } else {
            (p, p + Vec2::new(grid.h, 0.0))
        }
    }
}

#[derive(Clone, Debug)]
pub struct CutCell {
    pub cell: usize,
    /// Curve parameter intervals lying in the cell.
    pub arcs: Vec<(f64, f64)>,
    pub regions: Vec<CutRegion>,
    /// Area of the cell's intersection with the domain.
    pub area: f64,
}

#[derive(Clone, Debug)]
pub struct CutTopology {
    pub grid: Grid,
    pub kinds: Vec<CellKind>,
    /// Cover cells, sorted.
    pub cover: Vec<usize>,
    pub cut_cells: Vec<CutCell>,
    cut_slot: Vec<u32>,
    pub ghost_edges: Vec<GridEdge>,
    /// Straight segments of the fictitious-domain boundary.
    pub fictitious_boundary: Vec<(Vec2, Vec2)>,
    pub time_index: usize,
}

const NO_SLOT: u32 = u32::MAX;

/// Cells whose intersection with the domain is below this fraction of `h^2`
/// are left out of the cover.
pub const MIN_AREA_FRACTION: f64 = 1e-12;
pub const MAX_REGIONS: usize = 4;
pub const CLEARANCE_CELLS: f64 = 2.0;

impl CutTopology {
    pub fn interior_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cover.iter().copied().filter(|&c| self.kinds[c] == CellKind::Interior)
    }

    pub fn is_active(&self, c: usize) -> bool {
        self.kinds[c] != CellKind::Outside
    }

    pub fn cut_cell(&self, c: usize) -> Option<&CutCell> {
        match self.cut_slot[c] {
            NO_SLOT => None,
            s => Some(&self.cut_cells[s as usize]),
        }
    }

    /// Sum of interior-cell areas and cut-region areas.
    pub fn domain_area(&self) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        self.interior_cells().count() as f64 * h2 + self.cut_cells.iter().map(|c| c.area).sum::<f64>()
    }

    /// JSON dump of the index sets for visualisation.
    pub fn debug_json(&self) -> serde_json::Value {
        let ij = |c: usize| {
            let (i, j) = self.grid.ij(c);
            [i, j]
        };
        serde_json::json!({
            "grid": self.grid,
            "time_index": self.time_index,
            "cover": self.cover.iter().map(|&c| ij(c)).collect::<Vec<_>>(),
            "cut_cells": self.cut_cells.iter().map(|c| ij(c.cell)).collect::<Vec<_>>(),
            "ghost_edges": self.ghost_edges.iter().map(|e| [ij(e.lower), ij(e.upper)]).collect::<Vec<_>>(),
            "fictitious_boundary": self.fictitious_boundary.iter().map(|(a, b)| [[a.x, a.y], [b.x, b.y]]).collect::<Vec<_>>(),
        })
    }
}

/// Classifies every grid cell against the domain enclosed by `curve`.
pub fn classify(grid: &Grid, curve: &MarkerCurve) -> Result<CutTopology> {
    let (lo, hi) = curve.bbox();
    let clearance = CLEARANCE_CELLS * grid.h;
    let gmax = grid.max();
    if lo.x - grid.origin.x < clearance || lo.y - grid.origin.y < clearance || gmax.x - hi.x < clearance || gmax.y - hi.y < clearance {
        return Err(Error::DomainEscape { lo, hi });
    }

    let mut arcs = curve.grid_arcs(grid.origin, grid.h, grid.nx, grid.ny);
    arcs.sort_by(|a, b| (grid.index(a.cell.0, a.cell.1), a.start).partial_cmp(&(grid.index(b.cell.0, b.cell.1), b.start)).unwrap());
    let mut grouped: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for a in &arcs {
        let c = grid.index(a.cell.0, a.cell.1);
        match grouped.last_mut() {
            Some((last, v)) if *last == c => v.push((a.start, a.end)),
            _ => grouped.push((c, vec![(a.start, a.end)])),
        }
    }

    let h2 = grid.h * grid.h;
    let built: Vec<CutCell> = grouped
        .into_par_iter()
        .map(|(c, arcs)| {
            let (i, j) = grid.ij(c);
            let regions = build_regions((i, j), &grid.cell_square(i, j), &arcs, curve)?;
            if regions.len() > MAX_REGIONS {
                return Err(Error::Resolution { cell: (i, j), regions: regions.len() });
            }
            let area = regions.iter().map(|r| r.area(curve)).sum();
            Ok(CutCell { cell: c, arcs, regions, area })
        })
        .collect::<Result<_>>()?;

    let mut kinds = vec![CellKind::Outside; grid.num_cells()];
    let mut touched = vec![false; grid.num_cells()];
    let mut cut_cells = Vec::new();
    let mut cut_slot = vec![NO_SLOT; grid.num_cells()];
    for cc in built {
        touched[cc.cell] = true;
        if cc.area > MIN_AREA_FRACTION * h2 {
            kinds[cc.cell] = CellKind::Cut;
            cut_slot[cc.cell] = cut_cells.len() as u32;
            cut_cells.push(cc);
        }
    }

    // untouched cells: one scanline through the cell centres per row
    for j in 0..grid.ny {
        let yc = grid.origin.y + (j as f64 + 0.5) * grid.h;
        if yc < lo.y || yc > hi.y {
            continue;
        }
        let xs = (0..8).find_map(|k| curve.horizontal_crossings(yc + k as f64 * 1e-9 * grid.h));
        for i in 0..grid.nx {
            let c = grid.index(i, j);
            if touched[c] {
                continue;
            }
            let xc = grid.origin.x + (i as f64 + 0.5) * grid.h;
            let inside = match &xs {
                Some(xs) => xs.partition_point(|&x| x < xc) % 2 == 1,
                None => curve.point_inside(Vec2::new(xc, yc)),
            };
            if inside {
                kinds[c] = CellKind::Interior;
            }
        }
    }

    let cover: Vec<usize> = (0..grid.num_cells()).filter(|&c| kinds[c] != CellKind::Outside).collect();
    let mut ghost_edges = Vec::new();
    let mut fictitious_boundary = Vec::new();
    for &c in &cover {
        let (i, j) = grid.ij(c);
        let sq = grid.cell_square(i, j);
        for d in 0..4 {
            let nb = grid.neighbors(c).find(|&(dd, _)| dd == d).map(|(_, n)| n);
            match nb {
                Some(n) if kinds[n] != CellKind::Outside => {
                    // each shared edge once, from its lower cell
                    if d < 2 && (kinds[c] == CellKind::Cut || kinds[n] == CellKind::Cut) {
                        ghost_edges.push(GridEdge { lower: c, upper: n, axis: d });
                    }
                }
                _ => {
                    let (a, b) = match d {
                        0 => (sq.corner(1), sq.corner(2)),
                        1 => (sq.corner(2), sq.corner(3)),
                        2 => (sq.corner(3), sq.corner(0)),
                        _ => (sq.corner(0), sq.corner(1)),
                    };
                    fictitious_boundary.push((a, b));
                }
            }
        }
    }
    ghost_edges.sort();

    Ok(CutTopology { grid: *grid, kinds, cover, cut_cells, cut_slot, ghost_edges, fictitious_boundary, time_index: curve.time_index() })
}

/// Result of the fat-intersection check: for each cut cell, the number of
/// edge steps to a cell that is fully interior and contains the concentric
/// disk of radius `gamma h` (always true for interior cells when
/// `gamma <= 1/2`).
#[derive(Clone, Debug, Serialize)]
pub struct A2Report {
    pub max_steps: usize,
    pub steps: Vec<((usize, usize), usize)>,
    pub failures: Vec<(usize, usize)>,
}

impl A2Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn validate_a2(topology: &CutTopology, i_max: usize, gamma: f64) -> A2Report {
    let grid = &topology.grid;
    let good = |c: usize| topology.kinds[c] == CellKind::Interior && gamma <= 0.5;
    let mut steps = Vec::new();
    let mut failures = Vec::new();
    let mut max_steps = 0;
    for cc in &topology.cut_cells {
        let mut seen = vec![cc.cell];
        let mut queue = VecDeque::from([(cc.cell, 0usize)]);
        let mut found = None;
        while let Some((c, d)) = queue.pop_front() {
            if good(c) {
                found = Some(d);
                break;
            }
            if d == i_max {
                continue;
            }
            for (_, n) in grid.neighbors(c) {
                if topology.is_active(n) && !seen.contains(&n) {
                    seen.push(n);
                    queue.push_back((n, d + 1));
                }
            }
        }
        let ij = grid.ij(cc.cell);
        match found {
            Some(d) => {
                max_steps = max_steps.max(d);
                steps.push((ij, d));
            }
            None => failures.push(ij),
        }
    }
    A2Report { max_steps, steps, failures }
}
