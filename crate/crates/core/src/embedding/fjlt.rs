use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::codes::{row_bytes, sign_bit};
use super::{random_signs, rng_from_seed, Encoder};
use crate::dsp::fwht_in_place;
use crate::error::{check_len, CbeError, Result};

/// Default nonzero density of the sparse projection.
pub const DEFAULT_DENSITY: f64 = 0.1;

/// Fast JL transform codes, `h(x) = sign(P H D x)` with `H` the
/// (unnormalized) Walsh–Hadamard transform and `P` sparse Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct FjltParams {
    d: usize,
    k: usize,
    signs: Vec<i8>,
    /// Row start offsets into `cols`/`vals`, length `k + 1`.
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl FjltParams {
    /// Builds from `(row, col, value)` triples.
    pub fn from_triples(
        d: usize,
        k: usize,
        signs: Vec<i8>,
        triples: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if d == 0 || !d.is_power_of_two() {
            return Err(CbeError::invalid(format!(
                "FJLT needs a power-of-two d, got {d}"
            )));
        }
        if k == 0 {
            return Err(CbeError::invalid("FJLT code length must be positive"));
        }
        check_len("FJLT signs", d, signs.len())?;
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(CbeError::invalid("FJLT signs must be +1 or -1"));
        }
        let mut sorted = triples.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; k + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            if r >= k || c >= d {
                return Err(CbeError::invalid(format!(
                    "entry ({r}, {c}) outside {k}x{d}"
                )));
            }
            row_ptr[r + 1] += 1;
            cols.push(c as u32);
            vals.push(v);
        }
        for r in 0..k {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            d,
            k,
            signs,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Random parameters with exactly `round(density * k * d)` nonzeros (at
    /// least one) at uniformly chosen positions.
    pub fn random(d: usize, k: usize, density: f64, seed: u64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(CbeError::invalid(format!(
                "density {density} outside (0, 1]"
            )));
        }
        if d == 0 || k == 0 {
            return Err(CbeError::invalid("FJLT dimensions must be positive"));
        }
        let total = k * d;
        let nnz = ((density * total as f64).round() as usize).clamp(1, total);
        let mut rng = rng_from_seed(seed);
        let signs = random_signs(d, &mut rng);
        let mut positions = index::sample(&mut rng, total, nnz).into_vec();
        positions.sort_unstable();
        let triples: Vec<_> = positions
            .into_iter()
            .map(|p| (p / d, p % d, rng.sample(StandardNormal)))
            .collect();
        Self::from_triples(d, k, signs, &triples)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.k * self.d) as f64
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("input vector", self.d, x.len())?;
        let mut y: Vec<f64> = x
            .iter()
            .zip(&self.signs)
            .map(|(&v, &s)| v * f64::from(s))
            .collect();
        fwht_in_place(&mut y)?;
        Ok((0..self.k)
            .map(|r| {
                let span = self.row_ptr[r]..self.row_ptr[r + 1];
                self.cols[span.clone()]
                    .iter()
                    .zip(&self.vals[span])
                    .map(|(&c, &v)| v * y[c as usize])
                    .sum()
            })
            .collect())
    }
}

impl Encoder for FjltParams {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn bits(&self) -> usize {
        self.k
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        check_len("code row bytes", row_bytes(self.k), row.len())?;
        for (j, v) in self.project(x)?.into_iter().enumerate() {
            if sign_bit(v) {
                row[j / 8] |= 1 << (j % 8);
            }
        }
        Ok(())
    }
}
