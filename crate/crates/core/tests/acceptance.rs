//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! `cargo test -p fdcg-core --test acceptance` runs all of them (the two
//! solver sweeps take several minutes); pass criterion numbers as arguments
//! to run a subset, e.g. `... --test acceptance -- 4 5 8`.

use fdcg::cutmesh::{classify, Grid};
use fdcg::fem::{smallest_eigenvalue, Discretization, FeFunction, FeSpace, FormParams};
use fdcg::fields::{AffineField, DeformingVortex};
use fdcg::flowmap::DEFAULT_INVERSE_TOL;
use fdcg::problems::{deforming_disk, rotating_ellipse, stationary_disk, Problem};
use fdcg::stepper::{initialize, run, RunConfig};
use fdcg::studies::{projection_error, tracking_error};
use fdcg::{ButcherTableau, FlowMap, MarkerCurve, Mat2, Result, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

type Check = fn() -> Result<(bool, String)>;

/// `log2(e_i / e_{i+1})` for consecutive halvings.
fn rates(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn fmt_rates(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ")
}

fn sec7_sweep(k: usize, inv: &[f64]) -> Result<Vec<f64>> {
    let p = deforming_disk();
    inv.iter()
        .map(|&n| {
            let r = run(&p, &RunConfig::new(k, 1.0 / n, 1.0 / n))?;
            Ok(r.e_n.expect("exact solution known"))
        })
        .collect()
}

fn c1_sec7_k3() -> Result<(bool, String)> {
    let reference = [3.47e-5, 4.31e-6, 4.25e-7];
    let e = sec7_sweep(3, &[16.0, 32.0, 64.0])?;
    let r = rates(&e);
    let within = e.iter().zip(&reference).all(|(a, b)| a / b <= 10.0 && b / a <= 10.0);
    let pass = r.iter().all(|&x| x >= 2.7) && within;
    Ok((
        pass,
        format!("paper-sec7 k=3 h=tau=1/16..1/64: eN [{}] (reference [{}]), rates [{}] >= 2.7", fmt(&e), fmt(&reference), fmt_rates(&r)),
    ))
}

fn c2_sec7_k4() -> Result<(bool, String)> {
    let e = sec7_sweep(4, &[16.0, 32.0])?;
    let r = rates(&e);
    Ok((
        r[0] >= 3.6,
        format!("paper-sec7 k=4 h=tau=1/16, 1/32: eN [{}] (reference [2.430e-6, 9.900e-8]), rate {:.2} >= 3.6", fmt(&e), r[0]),
    ))
}

fn c3_tracking() -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [3usize, 4] {
        let mut e = Vec::new();
        for inv in [8.0, 16.0, 32.0, 64.0] {
            let mut cfg = RunConfig::new(k, 1.0 / inv, 1.0 / inv);
            cfg.eta = Some(1.0 / inv);
            e.push(tracking_error(&rotating_ellipse(), &cfg)?.sup_error);
        }
        let r = rates(&e);
        let want = k.min(4) as f64 - 0.3;
        pass &= r.iter().all(|&x| x >= want);
        detail.push(format!("k={k}: rates [{}] >= {want}", fmt_rates(&r)));
    }
    Ok((pass, format!("rotation tracking, eta = tau: {}", detail.join("; "))))
}

fn c4_spline() -> Result<(bool, String)> {
    let mut e = Vec::new();
    for j in [16usize, 32, 64, 128] {
        let c = MarkerCurve::circle(Vec2::ZERO, 1.0, j)?;
        let n = 64 * j;
        let err = (0..n).map(|i| (c.point(c.period() * i as f64 / n as f64).norm() - 1.0).abs()).fold(0.0, f64::max);
        e.push(err);
    }
    let r = rates(&e);
    Ok((r.iter().all(|&x| x >= 3.7), format!("unit circle interpolation: sup errors [{}], rates [{}] >= 3.7", fmt(&e), fmt_rates(&r))))
}

fn c5_flow_map() -> Result<(bool, String)> {
    let field = DeformingVortex;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<Vec2> = (0..100).map(|_| Vec2::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2))).collect();

    let flow = FlowMap::new(&field, 1.0 / 16.0, ButcherTableau::for_order(4)?);
    let mut roundtrip: f64 = 0.0;
    for (i, &x) in points.iter().enumerate() {
        let n = i % 32;
        let y = flow.step(x, n)?;
        roundtrip = roundtrip.max((flow.inverse_step(y, n, DEFAULT_INVERSE_TOL)? - x).norm());
    }

    let mut orders = Vec::new();
    let mut det_pass = true;
    for k in [3usize, 4] {
        let tab = ButcherTableau::for_order(k)?;
        // tau = 1/8 is not yet asymptotic for this field (|grad w| ~ 2 pi).
        let taus = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let mut e = Vec::new();
        for &tau in &taus {
            let flow = FlowMap::new(&field, tau, tab.clone());
            let n = (0.5 / tau) as usize;
            let mut worst: f64 = 0.0;
            for &x in &points {
                worst = worst.max((flow.step_with_jacobian(x, n)?.1.det() - 1.0).abs());
            }
            e.push(worst);
        }
        let order = rates(&e).into_iter().fold(f64::INFINITY, f64::min);
        det_pass &= order >= k as f64 + 0.8;
        orders.push(format!("k={k}: min order {order:.2} >= {}", k as f64 + 0.8));
    }

    let mut fd_rel: f64 = 0.0;
    let d = 1e-6;
    for &x in points.iter().take(20) {
        let (_, jac) = flow.step_with_jacobian(x, 7)?;
        for (col, dir) in [Vec2::new(d, 0.0), Vec2::new(0.0, d)].into_iter().enumerate() {
            let fd = (flow.step(x + dir, 7)? - flow.step(x - dir, 7)?) * (0.5 / d);
            let an = Vec2::new(jac.m[0][col], jac.m[1][col]);
            fd_rel = fd_rel.max((fd - an).norm() / an.norm());
        }
    }
    let pass = roundtrip <= 1e-12 && det_pass && fd_rel <= 1e-6;
    Ok((
        pass,
        format!("inverse roundtrip {roundtrip:.1e} <= 1e-12; |det J - 1| {}; Jacobian vs FD {fd_rel:.1e} <= 1e-6", orders.join(", ")),
    ))
}

fn bilinear_min_eig(space: &Arc<FeSpace>, curve: MarkerCurve, params: FormParams) -> Result<f64> {
    let topo = classify(&space.grid, &curve)?;
    let disc = Discretization::new(space.clone(), topo, curve, params)?;
    smallest_eigenvalue(&disc.assemble_bilinear())
}

fn c6_coercivity() -> Result<(bool, String)> {
    let k = 3;
    let mut detail = Vec::new();
    let mut pass = true;
    for inv in [16.0, 32.0] {
        let h = 1.0 / inv;
        let cfg = RunConfig::new(k, h, h);
        let params = FormParams { gamma0: 800.0, gamma1: 1.0 / 800.0, q: cfg.q };
        let space = Arc::new(FeSpace::new(Grid::square(Vec2::new(-1.5, -1.5), 3.0, h)?, k)?);

        let circle = stationary_disk();
        let lam_circle = bilinear_min_eig(&space, circle.initial_curve(fdcg::studies::marker_count(&circle, &cfg))?, params)?;

        let p = deforming_disk();
        let sim = initialize(&p, &cfg)?;
        let mut curve = sim.history.latest().disc.curve.clone();
        while curve.time_index() < inv as usize {
            curve = sim.track(&curve)?;
        }
        let lam_sec7 = bilinear_min_eig(&space, curve, params)?;
        pass &= lam_circle > 0.0 && lam_sec7 > 0.0;
        detail.push(format!("h=1/{inv}: circle {lam_circle:.2e}, sec7 t=1 {lam_sec7:.2e}"));
    }
    Ok((pass, format!("smallest eigenvalue of A (k=3, gamma0=800) > 0: {}", detail.join("; "))))
}

fn c7_ritz() -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [2usize, 3, 4] {
        let (mut l2, mut h1) = (Vec::new(), Vec::new());
        for inv in [4.0, 8.0, 16.0, 32.0] {
            let r = projection_error(&stationary_disk(), &RunConfig::new(k, 1.0 / inv, 1.0 / inv))?;
            l2.push(r.l2_error);
            h1.push(r.h1_error);
        }
        let (r0, r1) = (rates(&l2), rates(&h1));
        let kf = k as f64;
        pass &= r0.iter().all(|&x| x >= kf + 0.7) && r1.iter().all(|&x| x >= kf - 0.3);
        detail.push(format!("k={k}: L2 [{}] >= {}, H1 [{}] >= {}", fmt_rates(&r0), kf + 0.7, fmt_rates(&r1), kf - 0.3));
    }
    Ok((pass, format!("modified Ritz projection on the unit disk, h=1/4..1/32: {}", detail.join("; "))))
}

fn c8_quadrature() -> Result<(bool, String)> {
    let h = 1.0 / 16.0;
    let cfg = RunConfig::new(3, h, h);
    let disk = stationary_disk();
    let curve = disk.initial_curve(fdcg::studies::marker_count(&disk, &cfg))?;
    let grid = Grid::square(Vec2::new(-1.5, -1.5), 3.0, h)?;
    let topo = classify(&grid, &curve)?;
    let disc = Discretization::new(Arc::new(FeSpace::new(grid, 3)?), topo, curve, FormParams { gamma0: 800.0, gamma1: 1.0 / 800.0, q: 5 })?;
    let area: f64 = disc.topo.cover.iter().map(|&c| disc.volume_rule(c, 5).total_weight()).sum();
    let length: f64 = disc.cut_rules.iter().map(|(_, b)| b.total_weight()).sum();
    let (ea, el) = ((area - PI).abs(), (length - 2.0 * PI).abs());
    Ok((ea <= 1e-7 && el <= 1e-6, format!("unit circle h=1/16 q=5: |area - pi| {ea:.1e} <= 1e-7, |length - 2pi| {el:.1e} <= 1e-6")))
}

/// `∫_Ω g²` with the volume rules of `disc`.
fn l2_sq(disc: &Discretization, q: usize, g: impl Fn(Vec2) -> Result<f64>) -> Result<f64> {
    let mut s = 0.0;
    for &c in &disc.topo.cover {
        let rule = disc.volume_rule(c, q);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * g(*x)?.powi(2);
        }
    }
    Ok(s)
}

fn c9_pull_back() -> Result<(bool, String)> {
    // Compressible, so the pull-back genuinely changes the norm.
    let field = AffineField { a: Mat2::new(0.6, 0.5, -0.2, 0.4), b: Vec2::new(0.1, -0.05) };
    let k = 2;
    let h = 1.0 / 8.0;
    let grid = Grid::square(Vec2::new(-1.5, -1.5), 3.0, h)?;
    let space = Arc::new(FeSpace::new(grid, k)?);
    let params = FormParams::for_degree(k);
    let omega0 = MarkerCurve::circle(Vec2::ZERO, 0.6, 128)?;
    let disc0 = Discretization::new(space.clone(), classify(&grid, &omega0)?, omega0.clone(), params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // Interpolants of random low-frequency fields. Nodal noise would put
    // large derivative kinks on the mapped cell edges, and the quadrature
    // error there does not shrink with tau.
    let samples: Vec<FeFunction> = (0..5)
        .map(|_| {
            let modes: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| {
                    (rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            space.interpolate(|x| modes.iter().map(|&(a, kx, ky, ph)| a * (kx * x.x + ky * x.y + ph).cos()).sum())
        })
        .collect();
    const Q: usize = 10;
    let mut constants = Vec::new();
    let mut worst_dev: f64 = 0.0;
    for tau in [0.1, 0.05, 0.025] {
        let flow = FlowMap::new(&field, tau, ButcherTableau::for_order(3)?);
        let omega1 = omega0.track_step(&flow)?;
        let disc1 = Discretization::new(space.clone(), classify(&grid, &omega1)?, omega1, params)?;
        let mut c: f64 = f64::NEG_INFINITY;
        for v in &samples {
            let before = l2_sq(&disc0, Q, |x| Ok(v.eval(x)?.0))?;
            let after = l2_sq(&disc1, Q, |y| Ok(v.eval(flow.inverse_step(y, 0, DEFAULT_INVERSE_TOL)?)?.0))?;
            c = c.max((after / before - 1.0) / tau);
        }
        // For an affine field the squared-norm ratio is det J of the
        // discrete step, whatever the function.
        let exact = (flow.step_with_jacobian(Vec2::ZERO, 0)?.1.det() - 1.0) / tau;
        worst_dev = worst_dev.max((c / exact - 1.0).abs());
        constants.push(c);
    }
    let stable = constants.windows(2).all(|w| w[0] / w[1] <= 2.0 && w[1] / w[0] <= 2.0);
    Ok((
        stable && worst_dev < 0.05,
        format!("fitted C in (1 + C tau) for tau = 0.1, 0.05, 0.025: [{}], consecutive ratios within 2, deviation from (det J - 1)/tau {worst_dev:.1e}", fmt(&constants)),
    ))
}

fn c10_stationary_step() -> Result<(bool, String)> {
    let k = 3;
    let p = stationary_disk();
    let mut e = Vec::new();
    for inv in [8.0, 16.0, 32.0] {
        let h = 1.0 / inv;
        let mut sim = initialize(&p, &RunConfig::new(k, h, h))?;
        let rec = sim.advance()?;
        let (l2, h1) = (rec.l2_error.unwrap(), rec.h1_error.unwrap());
        e.push((l2 * l2 + h1 * h1).sqrt());
    }
    let r = rates(&e);
    let want = k as f64 - 0.3;
    Ok((
        r.iter().all(|&x| x >= want),
        format!("one BDF-3 step on the fixed disk, h=tau=1/8..1/32: H1 errors [{}], rates [{}] >= {want}", fmt(&e), fmt_rates(&r)),
    ))
}

fn main() {
    let checks: [(&str, &str, Check); 10] = [
        ("1", "sec7 rates k=3", c1_sec7_k3),
        ("2", "sec7 rates k=4", c2_sec7_k4),
        ("3", "tracking order", c3_tracking),
        ("4", "spline order", c4_spline),
        ("5", "flow map", c5_flow_map),
        ("6", "coercivity", c6_coercivity),
        ("7", "Ritz projection", c7_ritz),
        ("8", "cut quadrature", c8_quadrature),
        ("9", "pull-back stability", c9_pull_back),
        ("10", "stationary step", c10_stationary_step),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in checks {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!("{} [{id:>2}] {name}: {detail} ({secs:.1}s)", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
