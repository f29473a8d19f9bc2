//! One-dimensional Gauss-Lobatto Lagrange bases on `[0, 1]`.

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 4;

/// Gauss-Lobatto nodes on `[0, 1]` for degree `k` (`k + 1` nodes).
pub fn lobatto_nodes(k: usize) -> Vec<f64> {
    let s = |x: f64| 0.5 * (1.0 + x);
    match k {
        1 => vec![0.0, 1.0],
        2 => vec![0.0, 0.5, 1.0],
        3 => {
            let r = (1.0f64 / 5.0).sqrt();
            vec![0.0, s(-r), s(r), 1.0]
        }
        4 => {
            let r = (3.0f64 / 7.0).sqrt();
            vec![0.0, s(-r), 0.5, s(r), 1.0]
        }
        _ => panic!("unsupported degree {k}"),
    }
}

/// Lagrange basis through the Lobatto nodes, stored as monomial coefficients.
#[derive(Clone, Debug)]
pub struct Basis1d {
    pub k: usize,
    pub nodes: Vec<f64>,
    coef: Vec<[f64; MAX_DEGREE + 1]>,
}

impl Basis1d {
    pub fn new(k: usize) -> Self {
        let nodes = lobatto_nodes(k);
        let n = k + 1;
        let mut coef = vec![[0.0; MAX_DEGREE + 1]; n];
        for (a, c) in coef.iter_mut().enumerate() {
            // product form prod_{b != a} (t - t_b) / (t_a - t_b), expanded
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for b in 0..n {
                if b == a {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (m, &p) in poly.iter().enumerate() {
                    next[m + 1] += p;
                    next[m] -= p * nodes[b];
                }
                poly = next;
                denom *= nodes[a] - nodes[b];
            }
            for (m, p) in poly.iter().enumerate() {
                c[m] = p / denom;
            }
        }
        Basis1d { k, nodes, coef }
    }

    pub fn len(&self) -> usize {
        self.k + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `d`-th derivatives of all basis functions at `t`, written to `out`.
    #[inline]
    pub fn eval_into(&self, t: f64, d: usize, out: &mut [f64]) {
        for (a, c) in self.coef.iter().enumerate() {
            let mut v = 0.0;
            for m in (d..=self.k).rev() {
                v = v * t + c[m] * falling(m, d);
            }
            out[a] = v;
        }
    }

    pub fn eval(&self, t: f64, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(t, d, &mut out);
        out
    }
}

/// `m (m - 1) ... (m - d + 1)`
#[inline]
fn falling(m: usize, d: usize) -> f64 {
    ((m + 1 - d)..=m).map(|x| x as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_property_and_partition_of_unity() {
        for k in 1..=MAX_DEGREE {
            let b = Basis1d::new(k);
            for (i, &t) in b.nodes.iter().enumerate() {
                let v = b.eval(t, 0);
                for (a, x) in v.iter().enumerate() {
                    assert!((x - if a == i { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
            }
            for t in [0.1, 0.37, 0.9] {
                assert!((b.eval(t, 0).iter().sum::<f64>() - 1.0).abs() < 1e-13);
                assert!(b.eval(t, 1).iter().sum::<f64>().abs() < 1e-11);
            }
        }
    }

    #[test]
    fn derivatives_reproduce_monomials() {
        for k in 1..=MAX_DEGREE {
            let b = Basis1d::new(k);
            let f = |t: f64| t.powi(k as i32);
            let t = 0.3;
            for d in 0..=k {
                let coeffs: Vec<f64> = b.nodes.iter().map(|&x| f(x)).collect();
                let got: f64 = b.eval(t, d).iter().zip(&coeffs).map(|(p, c)| p * c).sum();
                let want = falling(k, d) * t.powi(k as i32 - d as i32);
                assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "k={k} d={d}");
            }
        }
    }
}
