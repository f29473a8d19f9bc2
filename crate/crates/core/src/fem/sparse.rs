//! Compressed sparse row matrices and the symmetric positive definite solve.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};
use std::io::Write;

/// Square CSR matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. The triplet order does not affect the result
    /// beyond the order of floating-point summation, which is by input order
    /// within each `(row, col)`.
    pub fn from_triplets(n: usize, t: Vec<(usize, usize, f64)>) -> Self {
        // Bucket by row, then sort and merge each (short) row.
        let mut start = vec![0usize; n + 1];
        for &(r, c, _) in &t {
            assert!(r < n && c < n, "entry ({r}, {c}) out of range {n}");
            start[r + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut bucket = vec![(0usize, 0.0f64); t.len()];
        for (r, c, v) in t {
            bucket[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(bucket.len() / 2);
        let mut vals: Vec<f64> = Vec::with_capacity(bucket.len() / 2);
        for r in 0..n {
            let row = &mut bucket[start[r]..start[r + 1]];
            row.sort_unstable_by_key(|e| e.0);
            let first = col_idx.len();
            for &(c, v) in row.iter() {
                if col_idx.len() > first && *col_idx.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        CsrMatrix { n, row_ptr, col_idx, vals }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), vals: vec![1.0; n] }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col_idx[p], self.vals[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.vals[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn dot_form(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Matrix Market coordinate format (1-based, general).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        // symmetric, so the row-compressed arrays are also column-compressed
        let symbolic = SymbolicSparseColMat::new_checked(self.n, self.n, self.row_ptr.clone(), None, self.col_idx.clone());
        Ok(SparseColMat::new(symbolic, self.vals.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    Cg,
}

#[derive(Clone, Debug)]
pub struct SolveInfo {
    pub method: SolveMethod,
    pub relative_residual: f64,
    pub iterations: usize,
}

pub const DEFAULT_SOLVE_TOL: f64 = 1e-11;

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// Solves `A x = b` for symmetric positive definite `A` by sparse Cholesky
/// with iterative refinement, falling back to Jacobi-preconditioned CG.
pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveInfo)> {
    if b.iter().all(|&v| v == 0.0) {
        return Ok((vec![0.0; a.n], SolveInfo { method: SolveMethod::Cholesky, relative_residual: 0.0, iterations: 0 }));
    }
    if let Ok(llt) = a.to_faer()?.sp_cholesky(Side::Lower) {
        let solve_once = |rhs: &[f64]| -> Vec<f64> {
            let m = Mat::<f64>::from_fn(a.n, 1, |i, _| rhs[i]);
            let x = llt.solve(&m);
            (0..a.n).map(|i| x[(i, 0)]).collect()
        };
        let mut x = solve_once(b);
        let mut res = relative_residual(a, &x, b);
        let mut it = 0;
        while res > tol && it < 3 {
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = solve_once(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            res = relative_residual(a, &x, b);
            it += 1;
        }
        if res <= tol && x.iter().all(|v| v.is_finite()) {
            return Ok((x, SolveInfo { method: SolveMethod::Cholesky, relative_residual: res, iterations: it }));
        }
    }
    pcg(a, b, tol, 20 * a.n.max(100))
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.n;
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut history = Vec::new();
    for it in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            history.push(f64::NAN);
            return Err(Error::Solver { reason: "conjugate gradient breakdown (matrix not positive definite)".into(), residuals: history });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / nb.max(f64::MIN_POSITIVE);
        history.push(rel);
        if rel <= tol {
            let res = relative_residual(a, &x, b);
            return Ok((x, SolveInfo { method: SolveMethod::Cg, relative_residual: res, iterations: it + 1 }));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if history.len() > 20 {
        let tail = history.split_off(history.len() - 20);
        history = tail;
    }
    Err(Error::Solver { reason: format!("conjugate gradient did not converge in {max_iter} iterations"), residuals: history })
}

/// Smallest eigenvalue of a symmetric matrix by shifted inverse iteration on
/// its Cholesky factor. Fails with a solver error when the matrix is not
/// positive definite.
pub fn smallest_eigenvalue(a: &CsrMatrix) -> Result<f64> {
    let llt = a
        .to_faer()?
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::Solver { reason: "Cholesky factorisation failed: matrix not positive definite".into(), residuals: vec![] })?;
    let n = a.n;
    let mut v = Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    let normalize = |v: &mut Mat<f64>| {
        let s = (0..n).map(|i| v[(i, 0)] * v[(i, 0)]).sum::<f64>().sqrt();
        for i in 0..n {
            v[(i, 0)] /= s;
        }
    };
    normalize(&mut v);
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        let mut w = llt.solve(&v);
        normalize(&mut w);
        let vv: Vec<f64> = (0..n).map(|i| w[(i, 0)]).collect();
        let rq = a.dot_form(&vv, &vv);
        v = w;
        if (rq - lambda).abs() <= 1e-12 * rq.abs() {
            return Ok(rq);
        }
        lambda = rq;
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_min_eig(a: &CsrMatrix) -> f64 {
        let m = Mat::<f64>::from_fn(a.n, a.n, |i, j| a.get(i, j));
        let ev = m.self_adjoint_eigenvalues(Side::Lower).unwrap();
        ev.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn random_spd(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
                t.push((i, j, v));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(3, vec![(2, 0, 1.0), (0, 1, 2.0), (2, 0, 3.0), (0, 0, 1.0), (1, 1, 5.0)]);
        assert_eq!(a.row_ptr, vec![0, 2, 3, 4]);
        assert_eq!(a.col_idx, vec![0, 1, 1, 0]);
        assert_eq!(a.get(2, 0), 4.0);
        assert_eq!(a.get(2, 2), 0.0);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, info) = solve(&CsrMatrix::identity(3), &b, DEFAULT_SOLVE_TOL).unwrap();
        assert_eq!(x, b);
        assert!(info.relative_residual <= DEFAULT_SOLVE_TOL);
    }

    #[test]
    fn random_spd_solve_and_cg() {
        let a = random_spd(50, 3);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&xs);
        let (x, info) = solve(&a, &b, DEFAULT_SOLVE_TOL).unwrap();
        assert_eq!(info.method, SolveMethod::Cholesky);
        assert!(info.relative_residual <= DEFAULT_SOLVE_TOL);
        assert!(x.iter().zip(&xs).all(|(p, q)| (p - q).abs() < 1e-6));
        let (_, info) = pcg(&a, &b, DEFAULT_SOLVE_TOL, 10_000).unwrap();
        assert!(info.relative_residual <= 1e-9);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(smallest_eigenvalue(&a), Err(Error::Solver { .. })));
        assert!(matches!(pcg(&a, &[0.0, 1.0], 1e-12, 10), Err(Error::Solver { .. })));
    }

    #[test]
    fn smallest_eigenvalue_matches_dense() {
        let a = random_spd(40, 9);
        let got = smallest_eigenvalue(&a).unwrap();
        let want = dense_min_eig(&a);
        assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{got} {want}");
    }

    #[test]
    fn matrix_market_header() {
        let mut buf = Vec::new();
        CsrMatrix::identity(2).write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1"));
    }
}
