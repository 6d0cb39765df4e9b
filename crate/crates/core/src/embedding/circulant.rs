//! Circulant binary embedding: `h(x) = sign(circ(r) D x)` computed with two
//! FFTs per generator, never forming the `d x d` matrix.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::codes::{pack_signs, row_bytes};
use super::{rng_from_seed, Encoder};
use crate::dsp::{circulant_apply, fft_real, ComplexSpectrum, FftPlan};
use crate::error::{check_len, CbeError, Result};

/// One circulant generator `r` with its sign diagonal `D`.
#[derive(Debug, Clone)]
pub struct Generator {
    r: Vec<f64>,
    signs: Vec<i8>,
    spectrum: ComplexSpectrum,
    plan: Arc<FftPlan>,
}

impl PartialEq for Generator {
    fn eq(&self, other: &Self) -> bool {
        self.r == other.r && self.signs == other.signs
    }
}

impl Generator {
    pub fn new(r: Vec<f64>, signs: Vec<i8>) -> Result<Self> {
        check_len("sign diagonal", r.len(), signs.len())?;
        if let Some(i) = r.iter().position(|v| !v.is_finite()) {
            return Err(CbeError::invalid(format!("r[{i}] is not finite")));
        }
        if let Some(i) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(CbeError::invalid(format!(
                "signs[{i}] = {} is not +1 or -1",
                signs[i]
            )));
        }
        let plan = FftPlan::shared(r.len())?;
        let spectrum = fft_real(&r)?;
        Ok(Self {
            r,
            signs,
            spectrum,
            plan,
        })
    }

    fn random(d: usize, rng: &mut impl Rng) -> Result<Self> {
        let r: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let signs = (0..d)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect();
        Self::new(r, signs)
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `F(r)`.
    pub fn spectrum(&self) -> &ComplexSpectrum {
        &self.spectrum
    }

    /// Full `d`-vector `circ(r) D x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut buf = Vec::with_capacity(self.dim());
        let mut out = Vec::with_capacity(self.dim());
        self.project_into(x, &mut buf, &mut out)?;
        Ok(out)
    }

    pub(crate) fn project_into(
        &self,
        x: &[f64],
        buf: &mut Vec<Complex64>,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        check_len("input vector", self.dim(), x.len())?;
        let flipped: Vec<f64> = x
            .iter()
            .zip(&self.signs)
            .map(|(&v, &s)| v * f64::from(s))
            .collect();
        circulant_apply(&self.plan, self.spectrum.values(), &flipped, buf, out)
    }
}

/// Parameters of a circulant embedding: the generator `r`, the sign
/// diagonal, the code length `k`, and extra generators for `k > d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantParams {
    k: usize,
    generators: Vec<Generator>,
}

impl CirculantParams {
    pub fn new(r: Vec<f64>, signs: Vec<i8>, k: usize) -> Result<Self> {
        Self::with_generators(vec![Generator::new(r, signs)?], k)
    }

    pub fn with_generators(generators: Vec<Generator>, k: usize) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(CbeError::invalid("at least one generator is required"));
        };
        let d = first.dim();
        if k == 0 {
            return Err(CbeError::invalid("code length k must be positive"));
        }
        for g in &generators[1..] {
            check_len("extra generator", d, g.dim())?;
        }
        if k > d * generators.len() {
            return Err(CbeError::invalid(format!(
                "k = {k} exceeds {} generators x d = {d}",
                generators.len()
            )));
        }
        Ok(Self { k, generators })
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> &[f64] {
        self.generators[0].r()
    }

    pub fn signs(&self) -> &[i8] {
        self.generators[0].signs()
    }

    pub fn primary(&self) -> &Generator {
        &self.generators[0]
    }

    pub fn extra_generators(&self) -> &[Generator] {
        &self.generators[1..]
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }
}

/// Random parameters: `r ~ N(0, 1)^d`, Rademacher signs, and
/// `ceil(k / d) - 1` extra generators when `k > d`.
pub fn cbe_random(d: usize, k: usize, seed: u64) -> Result<CirculantParams> {
    if d == 0 || k == 0 {
        return Err(CbeError::invalid("d and k must both be positive"));
    }
    if !d.is_power_of_two() {
        return Err(CbeError::invalid(format!("d = {d} is not a power of two")));
    }
    let mut rng = rng_from_seed(seed);
    let generators = (0..k.div_ceil(d))
        .map(|_| Generator::random(d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    CirculantParams::with_generators(generators, k)
}

impl Encoder for CirculantParams {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn bits(&self) -> usize {
        self.k
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        check_len("input vector", self.dim(), x.len())?;
        check_len("code row bytes", row_bytes(self.k), row.len())?;
        let d = self.dim();
        let mut buf = Vec::with_capacity(d);
        let mut proj = Vec::with_capacity(d);
        let mut offset = 0;
        for g in &self.generators {
            if offset >= self.k {
                break;
            }
            let take = (self.k - offset).min(d);
            g.project_into(x, &mut buf, &mut proj)?;
            pack_signs(&proj[..take], row, offset);
            offset += take;
        }
        Ok(())
    }
}

/// Code of one vector.
pub fn cbe_encode(params: &CirculantParams, x: &[f64]) -> Result<Vec<u8>> {
    params.encode(x)
}
