//! BDF-k coefficients as exact rationals.

/// `Λ^k u^n = Σ_{i=0..k} λ_i u^{n-i}` with `λ_i = num[i] / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BdfCoefficients {
    pub k: usize,
    pub num: [i64; 5],
    pub den: i64,
}

impl BdfCoefficients {
    pub fn new(k: usize) -> Option<Self> {
        let (num, den) = match k {
            1 => ([1, -1, 0, 0, 0], 1),
            2 => ([3, -4, 1, 0, 0], 2),
            3 => ([11, -18, 9, -2, 0], 6),
            4 => ([25, -48, 36, -16, 3], 12),
            _ => return None,
        };
        Some(BdfCoefficients { k, num, den })
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.num[i] as f64 / self.den as f64
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..=self.k).map(|i| self.lambda(i)).collect()
    }
}
