//! Binary encoders: circulant (random or learned), dense LSH, bilinear and
//! FJLT, plus bit packing and Hamming distance.

mod bilinear;
mod circulant;
mod codes;
mod fjlt;
mod lsh;
mod precondition;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use bilinear::{near_square_split, BilinearParams};
pub use circulant::{cbe_encode, cbe_random, CirculantParams, Generator};
pub use codes::{get_bit, hamming_packed, pack_signs, row_bytes, sign_bit, BinaryCodes};
pub use fjlt::{FjltParams, DEFAULT_DENSITY};
pub use lsh::LshParams;
pub use precondition::{precondition, Preconditioned, Preconditioner};

use crate::dataio::DataMatrix;
use crate::error::{check_len, CbeError, Result};

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn random_signs(d: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..d)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect()
}

/// A map from `input_dim()` reals to `bits()` packed sign bits.
pub trait Encoder: Send + Sync {
    fn input_dim(&self) -> usize;

    fn bits(&self) -> usize;

    /// Sets the code bits of `x` in `row`, which must be zeroed and exactly
    /// `row_bytes(self.bits())` long.
    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()>;

    fn encode(&self, x: &[f64]) -> Result<Vec<u8>> {
        let mut row = vec![0; row_bytes(self.bits())];
        self.encode_into(x, &mut row)?;
        Ok(row)
    }
}

impl<E: Encoder + ?Sized> Encoder for Box<E> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn bits(&self) -> usize {
        (**self).bits()
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        (**self).encode_into(x, row)
    }
}

/// Encodes every row of `data`. Rows are independent, so the output is the
/// same for any size of the rayon pool.
pub fn encode_matrix<E: Encoder + ?Sized>(encoder: &E, data: &DataMatrix) -> Result<BinaryCodes> {
    check_len("data columns", encoder.input_dim(), data.d())?;
    let mut codes = BinaryCodes::zeros(data.n(), encoder.bits());
    let rb = codes.row_bytes();
    if rb == 0 || data.n() == 0 {
        return Ok(codes);
    }
    codes
        .packed_mut()
        .par_chunks_mut(rb)
        .enumerate()
        .try_for_each(|(i, row)| {
            let x: Vec<f64> = data.row(i).iter().map(|&v| f64::from(v)).collect();
            encoder.encode_into(&x, row)
        })?;
    Ok(codes)
}

/// Encoder families, as named on the command line and in params files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    CbeRand,
    CbeOpt,
    Lsh,
    Bilinear,
    Fjlt,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::CbeRand,
        Method::CbeOpt,
        Method::Lsh,
        Method::Bilinear,
        Method::Fjlt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CbeRand => "cbe-rand",
            Method::CbeOpt => "cbe-opt",
            Method::Lsh => "lsh",
            Method::Bilinear => "bilinear",
            Method::Fjlt => "fjlt",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Method::CbeRand => 1,
            Method::CbeOpt => 2,
            Method::Lsh => 3,
            Method::Bilinear => 4,
            Method::Fjlt => 5,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn is_circulant(self) -> bool {
        matches!(self, Method::CbeRand | Method::CbeOpt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CbeError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CbeError::invalid(format!("unknown method {s:?}")))
    }
}

/// Any of the supported encoders behind one type.
#[derive(Debug, Clone)]
pub enum AnyEncoder {
    Circulant(CirculantParams),
    Lsh(LshParams),
    Bilinear(BilinearParams),
    Fjlt(FjltParams),
}

impl AnyEncoder {
    /// Seeded random parameters for `method`. `cbe-opt` has no random form.
    pub fn random(method: Method, d: usize, k: usize, seed: u64, density: f64) -> Result<Self> {
        Ok(match method {
            Method::CbeRand => AnyEncoder::Circulant(cbe_random(d, k, seed)?),
            Method::CbeOpt => {
                return Err(CbeError::invalid(
                    "cbe-opt parameters come from training, not from a seed",
                ))
            }
            Method::Lsh => AnyEncoder::Lsh(LshParams::random(d, k, seed)?),
            Method::Bilinear => AnyEncoder::Bilinear(BilinearParams::random(d, k, seed)?),
            Method::Fjlt => AnyEncoder::Fjlt(FjltParams::random(d, k, density, seed)?),
        })
    }

    fn inner(&self) -> &dyn Encoder {
        match self {
            AnyEncoder::Circulant(p) => p,
            AnyEncoder::Lsh(p) => p,
            AnyEncoder::Bilinear(p) => p,
            AnyEncoder::Fjlt(p) => p,
        }
    }
}

impl Encoder for AnyEncoder {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn bits(&self) -> usize {
        self.inner().bits()
    }

    fn encode_into(&self, x: &[f64], row: &mut [u8]) -> Result<()> {
        self.inner().encode_into(x, row)
    }
}
