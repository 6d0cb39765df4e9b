//! Binary-target updates and the frequency-domain statistics `m`, `h`, `g`
//! and `A` that make the spectrum update separable.

use num_complex::Complex64;
use rayon::prelude::*;

use super::PairConstraints;
use crate::dataio::DataMatrix;
use crate::dsp::{take_real_into, FftPlan};
use crate::embedding::CirculantParams;
use crate::error::{check_len, CbeError, Result};

/// Rows per work unit. Partial sums are formed per chunk and combined in a
/// fixed pairwise order, so results do not depend on the thread count.
const ROW_CHUNK: usize = 16;

/// Elementwise sum of equal-length vectors, combined pairwise in index order.
pub(crate) fn tree_sum(mut parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; len];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

/// Binary targets `B` (`n x d`). Columns `j < k` hold `±scale`; columns
/// `j >= k` are exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix {
    n: usize,
    d: usize,
    k: usize,
    values: Vec<f64>,
}

impl TargetMatrix {
    pub fn new(n: usize, d: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        check_len("target entries", n * d, values.len())?;
        if k > d {
            return Err(CbeError::invalid(format!("k = {k} exceeds d = {d}")));
        }
        Ok(Self { n, d, k, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

fn target_entry(projection: f64, j: usize, k: usize, scale: f64) -> f64 {
    if j >= k {
        0.0
    } else if projection >= 0.0 {
        scale
    } else {
        -scale
    }
}

/// `B[i][j] = sign((circ(r) D x_i)[j])` for `j < k`, zero otherwise.
pub fn update_b(params: &CirculantParams, x: &DataMatrix, k: usize) -> Result<TargetMatrix> {
    check_len("data columns", params.dim(), x.d())?;
    let d = params.dim();
    if k == 0 || k > d {
        return Err(CbeError::invalid(format!("k = {k} must be in 1..={d}")));
    }
    let mut values = vec![0.0; x.n() * d];
    values
        .par_chunks_mut(d)
        .enumerate()
        .try_for_each(|(i, row)| -> Result<()> {
            let proj = params.primary().project(&x.row_f64(i))?;
            for (j, (b, p)) in row.iter_mut().zip(&proj).enumerate() {
                *b = target_entry(*p, j, k, 1.0);
            }
            Ok(())
        })?;
    TargetMatrix::new(x.n(), d, k, values)
}

/// Spectra `F(x_i)` of the (sign-flipped) training rows.
#[derive(Debug, Clone)]
pub(crate) struct SpectralData {
    n: usize,
    d: usize,
    spectra: Vec<Complex64>,
}

impl SpectralData {
    pub(crate) fn new(x: &DataMatrix, signs: Option<&[i8]>) -> Result<Self> {
        let d = x.d();
        if let Some(s) = signs {
            check_len("sign diagonal", d, s.len())?;
        }
        let plan = FftPlan::shared(d)?;
        let mut spectra = vec![Complex64::new(0.0, 0.0); x.n() * d];
        spectra
            .par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(i, out)| {
                for (j, (o, &v)) in out.iter_mut().zip(x.row(i)).enumerate() {
                    let s = signs.map_or(1.0, |s| f64::from(s[j]));
                    *o = Complex64::new(f64::from(v) * s, 0.0);
                }
                plan.forward(out)
            })?;
        Ok(Self {
            n: x.n(),
            d,
            spectra,
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn d(&self) -> usize {
        self.d
    }

    fn row(&self, i: usize) -> &[Complex64] {
        &self.spectra[i * self.d..(i + 1) * self.d]
    }

    /// `m[l] = sum_i |F(x_i)[l]|^2`.
    pub(crate) fn energy(&self) -> Vec<f64> {
        let parts = (0..self.n)
            .collect::<Vec<_>>()
            .par_chunks(ROW_CHUNK)
            .map(|rows| {
                let mut acc = vec![0.0; self.d];
                for &i in rows {
                    for (a, v) in acc.iter_mut().zip(self.row(i)) {
                        *a += v.norm_sqr();
                    }
                }
                acc
            })
            .collect();
        tree_sum(parts, self.d)
    }

    /// `A[l] = sum_similar |F(x_i - x_j)[l]|^2 - sum_dissimilar |...|^2`.
    pub(crate) fn pair_energy(&self, constraints: &PairConstraints) -> Result<Vec<f64>> {
        constraints.validate(self.n)?;
        let mut a = vec![0.0; self.d];
        for (pairs, sign) in [(&constraints.similar, 1.0), (&constraints.dissimilar, -1.0)] {
            for &(i, j) in pairs {
                for ((acc, u), v) in a.iter_mut().zip(self.row(i)).zip(self.row(j)) {
                    *acc += sign * (u - v).norm_sqr();
                }
            }
        }
        Ok(a)
    }

    /// Targets for spectrum `r_spectrum`, and the residual `||B - X R^T||_F^2`.
    pub(crate) fn targets(
        &self,
        r_spectrum: &[Complex64],
        k: usize,
        scale: f64,
    ) -> Result<(TargetMatrix, f64)> {
        let d = self.d;
        let plan = FftPlan::shared(d)?;
        let mut values = vec![0.0; self.n * d];
        let residuals = values
            .par_chunks_mut(d * ROW_CHUNK)
            .enumerate()
            .map(|(c, block)| -> Result<Vec<f64>> {
                let mut buf = Vec::with_capacity(d);
                let mut proj = Vec::with_capacity(d);
                let mut residual = 0.0;
                for (r, row) in block.chunks_exact_mut(d).enumerate() {
                    let i = c * ROW_CHUNK + r;
                    buf.clear();
                    buf.extend(self.row(i).iter().zip(r_spectrum).map(|(x, s)| x * s));
                    plan.inverse(&mut buf)?;
                    take_real_into(&buf, &mut proj)?;
                    for (j, (b, p)) in row.iter_mut().zip(&proj).enumerate() {
                        *b = target_entry(*p, j, k, scale);
                        residual += (*b - p).powi(2);
                    }
                }
                Ok(vec![residual])
            })
            .collect::<Result<Vec<_>>>()?;
        let residual = tree_sum(residuals, 1)[0];
        Ok((TargetMatrix::new(self.n, d, k, values)?, residual))
    }

    /// Linear coefficients `(h, g)` for the current targets.
    pub(crate) fn linear_terms(&self, b: &TargetMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("target rows", self.n, b.n())?;
        check_len("target columns", self.d, b.d())?;
        let d = self.d;
        let plan = FftPlan::shared(d)?;
        let parts = (0..self.n)
            .collect::<Vec<_>>()
            .par_chunks(ROW_CHUNK)
            .map(|rows| -> Result<Vec<f64>> {
                let mut acc = vec![0.0; 2 * d];
                let mut fb = vec![Complex64::new(0.0, 0.0); d];
                for &i in rows {
                    for (o, &v) in fb.iter_mut().zip(b.row(i)) {
                        *o = Complex64::new(v, 0.0);
                    }
                    plan.forward(&mut fb)?;
                    let (h, g) = acc.split_at_mut(d);
                    for (l, (x, bb)) in self.row(i).iter().zip(&fb).enumerate() {
                        h[l] -= 2.0 * (x.re * bb.re + x.im * bb.im);
                        g[l] += 2.0 * (x.im * bb.re - x.re * bb.im);
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut hg = tree_sum(parts, 2 * d);
        let g = hg.split_off(d);
        Ok((hg, g))
    }
}

/// Diagonal quadratic and linear coefficients of the data and
/// semi-supervised terms in the frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyStats {
    pub m_diag: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub a_diag: Vec<f64>,
    pub mu: f64,
}

impl FrequencyStats {
    /// `m + mu * A`, the quadratic weight used by the spectrum update.
    pub fn effective_diag(&self) -> Vec<f64> {
        self.m_diag
            .iter()
            .zip(&self.a_diag)
            .map(|(m, a)| m + self.mu * a)
            .collect()
    }
}

/// Statistics for data `x` as seen by `circ(r)` (apply any sign flip first)
/// and targets `b`.
pub fn accumulate_stats(
    x: &DataMatrix,
    b: &TargetMatrix,
    constraints: &PairConstraints,
    mu: f64,
) -> Result<FrequencyStats> {
    let spectral = SpectralData::new(x, None)?;
    let (h, g) = spectral.linear_terms(b)?;
    Ok(FrequencyStats {
        m_diag: spectral.energy(),
        h,
        g,
        a_diag: spectral.pair_energy(constraints)?,
        mu,
    })
}
