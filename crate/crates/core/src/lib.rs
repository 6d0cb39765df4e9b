//! Circulant binary embedding: fast sign-of-circulant-projection codes,
//! their learned variant, baselines, and evaluation tools.

pub mod dataio;
pub mod dsp;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod optimizer;

pub use dataio::{normalize_rows, DataMatrix};
pub use embedding::{
    cbe_encode, cbe_random, encode_matrix, AnyEncoder, BinaryCodes, CirculantParams, Encoder,
    Method,
};
pub use error::{CbeError, Result};
pub use optimizer::{train, OptConfig, PairConstraints, TrainOutput};
