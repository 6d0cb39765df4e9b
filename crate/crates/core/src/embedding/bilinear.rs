use rand::Rng;
use rand_distr::StandardNormal;

use super::codes::{pack_signs, row_bytes};
use super::{rng_from_seed, Encoder};
use crate::error::{check_len, CbeError, Result};

/// Splits `n` into `(n1, n2)` with `n1 * n2 == n`, as close to square as
/// possible. Powers of two use `n1 = 2^ceil(log2(sqrt(n)))`.
pub fn near_square_split(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    if n.is_power_of_two() {
        let bits = n.trailing_zeros();
        let n1 = 1usize << bits.div_ceil(2);
        return (n1, n / n1);
    }
    let mut best = (n, 1);
    let mut f = 1;
    while f * f <= n {
        if n.is_multiple_of(f) {
            best = (n / f, f);
        }
        f += 1;
    }
    best
}

/// Bilinear projection `sign(R1^T Z R2)`, where `Z` is the input reshaped
/// row-major to `d1 x d2` and the `k1 x k2` result is flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearParams {
    d1: usize,
    d2: usize,
    k1: usize,
    k2: usize,
    /// `d1 x k1`, row-major.
    r1: Vec<f64>,
    /// `d2 x k2`, row-major.
    r2: Vec<f64>,
}

impl BilinearParams {
    pub fn from_factors(
        (d1, d2): (usize, usize),
        (k1, k2): (usize, usize),
        r1: Vec<f64>,
        r2: Vec<f64>,
    ) -> Result<Self> {
        if [d1, d2, k1, k2].contains(&0) {
            return Err(CbeError::invalid("bilinear factors must be positive"));
        }
        check_len("R1 entries", d1 * k1, r1.len())?;
        check_len("R2 entries", d2 * k2, r2.len())?;
        Ok(Self {
            d1,
            d2,
            k1,
            k2,
            r1,
            r2,
        })
    }

    pub fn random(d: usize, k: usize, seed: u64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(CbeError::invalid("bilinear dimensions must be positive"));
        }
        let (d1, d2) = near_square_split(d);
        let (k1, k2) = near_square_split(k);
        if k1 > d1 || k2 > d2 {
            return Err(CbeError::invalid(format!(
                "bilinear code {k1}x{k2} does not fit input {d1}x{d2}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut normal =
            |len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample(StandardNormal)).collect() };
        let r1 = normal(d1 * k1);
        let r2 = normal(d2 * k2);
        Self::from_factors((d1, d2), (k1, k2), r1, r2)
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn code_shape(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    /// The real-valued `k1 x k2` projection, flattened row-major.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("input vector", self.d1 * self.d2, x.len())?;
        // T = Z R2, d1 x k2
        let mut t = vec![0.0; self.d1 * self.k2];
        for (z_row, t_row) in x.chunks_exact(self.d2).zip(t.chunks_exact_mut(self.k2)) {
            for (&z, r2_row) in z_row.iter().zip(self.r2.chunks_exact(self.k2)) {
                for (tv, &rv) in t_row.iter_mut().zip(r2_row) {
                    *tv += z * rv;
                }
            }
        }
        // out = R1^T T, k1 x k2
        let mut out = vec![0.0; self.k1 * self.k2];
        for (r1_row, t_row) in self.r1.chunks_exact(self.k1).zip(t.chunks_exact(self.k2)) {
            for (&a, out_row) in r1_row.iter().zip(out.chunks_exact_mut(self.k2)) {
                for (o, &tv) in out_row.iter_mut().zip(t_row) {
                    *o += a * tv;
                }
            }
        }
        Ok(out)
    }
}

impl Encoder for BilinearParams {
    fn input_dim(&self) -> usize {
        self.d1 * self.d2
    }

    fn bits(&self) -> usize {
        self.k1 * self.k2
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        check_len("code row bytes", row_bytes(self.bits()), row.len())?;
        let proj = self.project(x)?;
        pack_signs(&proj, row, 0);
        Ok(())
    }
}
