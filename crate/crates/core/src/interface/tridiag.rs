//! Periodic (cyclic) tridiagonal solver: Thomas algorithm plus a
//! Sherman-Morrison correction for the two corner entries.

/// Solves the cyclic system with constant stencil `(off, diag, off)` in every
/// row, corners included. Requires `n >= 3` and a diagonally dominant stencil.
pub fn solve_periodic_constant(off: f64, diag: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    solve_cyclic(&vec![off; n], &vec![diag; n], &vec![off; n], off, off, rhs)
}

/// General cyclic tridiagonal solve. `sub[i]` multiplies `x[i-1]`, `sup[i]`
/// multiplies `x[i+1]` (entries `sub[0]`, `sup[n-1]` unused); `bottom_left`
/// is `A[n-1][0]` and `top_right` is `A[0][n-1]`.
pub fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], bottom_left: f64, top_right: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n >= 3, "cyclic solve needs at least 3 unknowns");
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= bottom_left * top_right / gamma;
    let x = thomas(sub, &d, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = bottom_left;
    let z = thomas(sub, &d, sup, &u);
    let fact = (x[0] + top_right * x[n - 1] / gamma) / (1.0 + z[0] + top_right * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply_periodic(off: f64, diag: f64, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n).map(|i| off * x[(i + n - 1) % n] + diag * x[i] + off * x[(i + 1) % n]).collect()
    }

    #[test]
    fn four_by_four() {
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let x = solve_periodic_constant(0.5, 2.0, &rhs);
        let back = apply_periodic(0.5, 2.0, &x);
        for (a, b) in back.iter().zip(rhs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn residual_is_tiny(rhs in proptest::collection::vec(-10.0f64..10.0, 3..200)) {
            let x = solve_periodic_constant(0.5, 2.0, &rhs);
            let back = apply_periodic(0.5, 2.0, &x);
            for (a, b) in back.iter().zip(&rhs) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
