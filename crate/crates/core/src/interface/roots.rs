//! Real roots of a cubic on a bounded interval.

/// At most three roots plus one tangential touch.
#[derive(Clone, Copy, Debug, Default)]
pub struct Roots {
    vals: [f64; 4],
    len: usize,
    /// Set when a critical point of the cubic lies on the zero level (within
    /// the caller's tolerance), i.e. the line is tangent to the curve.
    pub tangent: bool,
}

impl Roots {
    fn push(&mut self, s: f64) {
        if self.len < 4 {
            self.vals[self.len] = s;
            self.len += 1;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.len]
    }
}

#[inline]
pub fn eval(c: &[f64; 4], s: f64) -> f64 {
    ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
}

#[inline]
pub fn deriv(c: &[f64; 4], s: f64) -> f64 {
    (3.0 * c[3] * s + 2.0 * c[2]) * s + c[1]
}

/// Roots of `c0 + c1 s + c2 s^2 + c3 s^3` in `[lo, hi]`, ascending.
///
/// The interval is split at the critical points into monotone pieces and each
/// sign change is refined by safeguarded Newton. `zero_tol` is the absolute
/// value below which the cubic at a critical point counts as a tangential
/// touch.
pub fn cubic_roots(c: &[f64; 4], lo: f64, hi: f64, zero_tol: f64) -> Roots {
    let mut out = Roots::default();
    let mut breaks = [lo, 0.0, 0.0, hi];
    let mut nb = 1;
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let mut crit = [f64::NAN; 2];
    if qa != 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            if q != 0.0 {
                crit = [q / qa, qc / q];
            } else {
                crit = [0.0, 0.0];
            }
        }
    } else if qb != 0.0 {
        crit[0] = -qc / qb;
    }
    if crit[0] > crit[1] {
        crit.swap(0, 1);
    }
    for &s in &crit {
        if s.is_finite() && s > lo && s < hi && s > breaks[nb - 1] {
            breaks[nb] = s;
            nb += 1;
        }
    }
    breaks[nb] = hi;
    nb += 1;

    let mut prev = f64::NAN;
    let mut push = |out: &mut Roots, s: f64| {
        if !(s - prev).abs().le(&(1e-14 * (hi - lo).abs().max(f64::MIN_POSITIVE))) {
            out.push(s);
            prev = s;
        }
    };
    for w in 0..nb - 1 {
        let (a, b) = (breaks[w], breaks[w + 1]);
        let ga = eval(c, a);
        let gb = eval(c, b);
        if w > 0 && ga.abs() <= zero_tol {
            // interior critical point on the zero level
            out.tangent = true;
            push(&mut out, a);
            continue;
        }
        if ga == 0.0 {
            push(&mut out, a);
        } else if ga * gb < 0.0 {
            push(&mut out, refine(c, a, b, ga));
        }
    }
    if eval(c, hi) == 0.0 {
        push(&mut out, hi);
    }
    out
}

/// Safeguarded Newton on a bracket with a sign change.
fn refine(c: &[f64; 4], mut a: f64, mut b: f64, ga: f64) -> f64 {
    let increasing = ga < 0.0;
    let mut s = 0.5 * (a + b);
    for _ in 0..100 {
        let g = eval(c, s);
        if g == 0.0 {
            return s;
        }
        if (g < 0.0) == increasing {
            a = s;
        } else {
            b = s;
        }
        let d = deriv(c, s);
        let mut next = if d != 0.0 { s - g / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - s).abs() <= 2.0 * f64::EPSILON * s.abs().max(b - a).max(f64::MIN_POSITIVE)
            || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
        {
            return next;
        }
        s = next;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_simple_roots() {
        // (s - 0.1)(s - 0.5)(s - 0.9)
        let c = [-0.045, 0.59, -1.5, 1.0];
        let r = cubic_roots(&c, 0.0, 1.0, 1e-14);
        let v = r.as_slice();
        assert_eq!(v.len(), 3);
        for (x, e) in v.iter().zip([0.1, 0.5, 0.9]) {
            assert!((x - e).abs() < 1e-14);
        }
        assert!(!r.tangent);
    }

    #[test]
    fn tangential_touch_flagged() {
        // (s - 0.5)^2
        let c = [0.25, -1.0, 1.0, 0.0];
        let r = cubic_roots(&c, 0.0, 1.0, 1e-14);
        assert!(r.tangent);
        assert_eq!(r.as_slice().len(), 1);
        assert!((r.as_slice()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn linear_and_constant() {
        let r = cubic_roots(&[-0.3, 1.0, 0.0, 0.0], 0.0, 1.0, 0.0);
        assert_eq!(r.as_slice(), &[0.3]);
        assert!(cubic_roots(&[1.0, 0.0, 0.0, 0.0], 0.0, 1.0, 0.0).as_slice().is_empty());
    }

    proptest! {
        #[test]
        fn recovers_planted_roots(r1 in 0.01f64..0.32, r2 in 0.34f64..0.65, r3 in 0.67f64..0.99, k in 0.5f64..3.0) {
            let c = [-k * r1 * r2 * r3, k * (r1 * r2 + r1 * r3 + r2 * r3), -k * (r1 + r2 + r3), k];
            let r = cubic_roots(&c, 0.0, 1.0, 0.0);
            prop_assert_eq!(r.as_slice().len(), 3);
            for (x, e) in r.as_slice().iter().zip([r1, r2, r3]) {
                prop_assert!((x - e).abs() < 1e-12);
            }
        }
    }
}
