//! Transform kernels: radix-2 complex FFT, Walsh–Hadamard transform,
//! FFT-based circulant products and circular shifts.
//!
//! Convention: the forward transform uses the negative exponent,
//! `X[l] = sum_m x[m] exp(-2 pi i l m / d)`, and the inverse carries the
//! whole `1/d` factor. The optimizer's frequency-domain statistics assume
//! exactly this normalization.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{check_len, CbeError, Result};

/// Largest imaginary residual tolerated when a transform result is known to
/// be real. Scaled by `1 + max|re|` of the result.
pub const REAL_RESIDUAL_TOL: f64 = 1e-7;

/// Precomputed twiddles and bit-reversal table for one power-of-two size.
#[derive(Debug)]
pub struct FftPlan {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl FftPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(CbeError::invalid("transform size must be at least 1"));
        }
        if !len.is_power_of_two() {
            return Err(CbeError::invalid(format!(
                "transform size {len} is not a power of two"
            )));
        }
        let twiddles = (0..len / 2)
            .map(|j| {
                let angle = -2.0 * PI * j as f64 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len as u32)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (32 - bits)
                }
            })
            .collect();
        Ok(Self {
            len,
            twiddles,
            bitrev,
        })
    }

    /// Process-wide cached plan for `len`.
    pub fn shared(len: usize) -> Result<Arc<FftPlan>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FftPlan>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(plan) = guard.get(&len) {
            return Ok(plan.clone());
        }
        let plan = Arc::new(FftPlan::new(len)?);
        guard.insert(len, plan.clone());
        Ok(plan)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) -> Result<()> {
        check_len("fft buffer", self.len, buf.len())?;
        self.butterflies(buf, false);
        Ok(())
    }

    pub fn inverse(&self, buf: &mut [Complex64]) -> Result<()> {
        check_len("ifft buffer", self.len, buf.len())?;
        self.butterflies(buf, true);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
        Ok(())
    }

    fn butterflies(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for block in buf.chunks_exact_mut(size) {
                let (lo, hi) = block.split_at_mut(half);
                for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let w = self.twiddles[j * stride];
                    let w = if inverse { w.conj() } else { w };
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            size <<= 1;
        }
    }
}

/// Spectrum of a length-`d` signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum(Vec<Complex64>);

impl ComplexSpectrum {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when the spectrum could belong to a real signal: real DC term and
    /// `X[d-i] == conj(X[i])`.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let d = self.0.len();
        if d == 0 {
            return true;
        }
        if self.0[0].im.abs() > tol {
            return false;
        }
        (1..=d / 2).all(|i| (self.0[d - i] - self.0[i].conj()).norm() <= tol)
    }
}

pub fn fft(signal: &[Complex64]) -> Result<ComplexSpectrum> {
    let plan = FftPlan::shared(signal.len())?;
    let mut buf = signal.to_vec();
    plan.forward(&mut buf)?;
    Ok(ComplexSpectrum(buf))
}

/// Forward transform of a real signal.
pub fn fft_real(signal: &[f64]) -> Result<ComplexSpectrum> {
    let plan = FftPlan::shared(signal.len())?;
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf)?;
    Ok(ComplexSpectrum(buf))
}

pub fn ifft(spectrum: &ComplexSpectrum) -> Result<Vec<Complex64>> {
    let plan = FftPlan::shared(spectrum.len())?;
    let mut buf = spectrum.0.clone();
    plan.inverse(&mut buf)?;
    Ok(buf)
}

/// Drops the imaginary parts of a result that must be real, failing if the
/// residual exceeds [`REAL_RESIDUAL_TOL`].
pub fn take_real(values: &[Complex64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    take_real_into(values, &mut out)?;
    Ok(out)
}

pub(crate) fn take_real_into(values: &[Complex64], out: &mut Vec<f64>) -> Result<()> {
    let max_re = values.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
    let max_im = values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    if max_im.is_nan() || max_im > REAL_RESIDUAL_TOL * (1.0 + max_re) {
        return Err(CbeError::Numerical(format!(
            "imaginary residual {max_im:e} in a result that should be real"
        )));
    }
    out.clear();
    out.extend(values.iter().map(|v| v.re));
    Ok(())
}

/// Product `circ(r) x`, where `circ(r)` has `r` as its first column:
/// entry `(i, j)` is `r[(i - j) mod d]`.
pub fn circulant_multiply(r: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("circulant operand", r.len(), x.len())?;
    let spectrum = fft_real(r)?;
    let plan = FftPlan::shared(r.len())?;
    let mut buf = Vec::with_capacity(r.len());
    let mut out = Vec::with_capacity(r.len());
    circulant_apply(&plan, spectrum.values(), x, &mut buf, &mut out)?;
    Ok(out)
}

/// `circ(r) x` given the precomputed spectrum of `r`. `buf` is scratch.
pub(crate) fn circulant_apply(
    plan: &FftPlan,
    r_spectrum: &[Complex64],
    x: &[f64],
    buf: &mut Vec<Complex64>,
    out: &mut Vec<f64>,
) -> Result<()> {
    check_len("circulant input", plan.len(), x.len())?;
    buf.clear();
    buf.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
    plan.forward(buf)?;
    for (b, s) in buf.iter_mut().zip(r_spectrum) {
        *b *= s;
    }
    plan.inverse(buf)?;
    take_real_into(buf, out)
}

/// In-place unnormalized Walsh–Hadamard transform (Sylvester ordering).
pub fn fwht_in_place(data: &mut [f64]) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(CbeError::invalid(format!(
            "Walsh-Hadamard size {n} is not a power of two"
        )));
    }
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

pub fn fwht(signal: &[f64]) -> Result<Vec<f64>> {
    let mut out = signal.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// `result[j] = x[(j - t) mod d]`.
pub fn circular_shift(x: &[f64], t: i64) -> Vec<f64> {
    let d = x.len();
    if d == 0 {
        return Vec::new();
    }
    let t = t.rem_euclid(d as i64) as usize;
    let mut out = Vec::with_capacity(d);
    out.extend_from_slice(&x[d - t..]);
    out.extend_from_slice(&x[..d - t]);
    out
}
