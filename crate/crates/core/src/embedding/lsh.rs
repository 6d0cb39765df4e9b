use rand::Rng;
use rand_distr::StandardNormal;

use super::codes::{row_bytes, sign_bit};
use super::{rng_from_seed, Encoder};
use crate::error::{check_len, CbeError, Result};

/// Dense `k x d` Gaussian projection, `h(x) = sign(A x)`.
///
/// Stored in `f32`: this is the memory-bound baseline, and `k * d` floats is
/// the whole point of the comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct LshParams {
    d: usize,
    k: usize,
    a: Vec<f32>,
}

impl LshParams {
    pub fn from_matrix(k: usize, d: usize, a: Vec<f32>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(CbeError::invalid("LSH dimensions must be positive"));
        }
        check_len("LSH matrix", k * d, a.len())?;
        Ok(Self { d, k, a })
    }

    pub fn random(d: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(CbeError::invalid("LSH dimensions must be positive"));
        }
        let len = k
            .checked_mul(d)
            .ok_or_else(|| CbeError::invalid("LSH matrix size overflows"))?;
        let mut rng = rng_from_seed(seed);
        let a = (0..len)
            .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
            .collect();
        Ok(Self { d, k, a })
    }

    pub fn matrix(&self) -> &[f32] {
        &self.a
    }
}

pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    acc.iter().sum::<f32>() + tail
}

impl Encoder for LshParams {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn bits(&self) -> usize {
        self.k
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        check_len("input vector", self.d, x.len())?;
        check_len("code row bytes", row_bytes(self.k), row.len())?;
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        for (j, a_row) in self.a.chunks_exact(self.d).enumerate() {
            if sign_bit(f64::from(dot_f32(a_row, &xf))) {
                row[j / 8] |= 1 << (j % 8);
            }
        }
        Ok(())
    }
}
