use super::{random_signs, rng_from_seed, Encoder};
use crate::dsp::fwht_in_place;
use crate::error::{check_len, CbeError, Result};

/// Offsets an encoder seed so its preconditioner draws an independent stream.
const ENCODER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Blockwise randomized Hadamard rotation, `y_b = fwht(signs_b * x_b) / sqrt(block)`.
/// Spreads the mass of sparse or peaky inputs without changing their norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    signs: Vec<i8>,
    block: usize,
}

impl Preconditioner {
    pub fn new(signs: Vec<i8>, block: usize) -> Result<Self> {
        let d = signs.len();
        if d == 0 || !d.is_power_of_two() {
            return Err(CbeError::invalid(format!(
                "preconditioner dimension {d} is not a power of two"
            )));
        }
        if block == 0 || !block.is_power_of_two() || !d.is_multiple_of(block) {
            return Err(CbeError::invalid(format!(
                "block size {block} must be a power of two dividing d = {d}"
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(CbeError::invalid("preconditioner signs must be +1 or -1"));
        }
        Ok(Self { signs, block })
    }

    pub fn random(d: usize, block: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        Self::new(random_signs(d, &mut rng), block)
    }

    /// Preconditioner paired with an encoder built from `seed`.
    pub fn for_encoder_seed(d: usize, block: usize, seed: u64) -> Result<Self> {
        Self::random(d, block, seed ^ ENCODER_SEED_SALT)
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("input vector", self.dim(), x.len())?;
        let scale = 1.0 / (self.block as f64).sqrt();
        let mut y: Vec<f64> = x
            .iter()
            .zip(&self.signs)
            .map(|(&v, &s)| v * f64::from(s))
            .collect();
        for chunk in y.chunks_exact_mut(self.block) {
            fwht_in_place(chunk)?;
            for v in chunk.iter_mut() {
                *v *= scale;
            }
        }
        Ok(y)
    }
}

pub fn precondition(x: &[f64], signs: &[i8], block: usize) -> Result<Vec<f64>> {
    check_len("sign vector", x.len(), signs.len())?;
    Preconditioner::new(signs.to_vec(), block)?.apply(x)
}

/// Any encoder with a [`Preconditioner`] in front of it.
#[derive(Debug, Clone)]
pub struct Preconditioned<E> {
    pub pre: Preconditioner,
    pub inner: E,
}

impl<E: Encoder> Encoder for Preconditioned<E> {
    fn input_dim(&self) -> usize {
        self.pre.dim()
    }

    fn bits(&self) -> usize {
        self.inner.bits()
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        self.inner.encode_into(&self.pre.apply(x)?, row)
    }
}
