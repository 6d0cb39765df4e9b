//! Binary file formats. All integers and floats are little-endian.
//!
//! | file   | layout                                                              |
//! |--------|---------------------------------------------------------------------|
//! | matrix | `CBEM`, u32 version, u64 n, u64 d, n*d f32 row-major               |
//! | codes  | `CBEC`, u32 version, u64 n, u64 k, n*ceil(k/8) bytes, LSB first    |
//! | params | `CBEP`, u32 version, u8 method, u64 d, u64 k, u64 seed, f64 density,|
//! |        | u32 generators, then per generator d f64 `r` and d i8 signs        |
//!
//! Baseline params (LSH, bilinear, FJLT) store zero generators and are
//! regenerated from `(d, k, seed, density)`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataio::DataMatrix;
use crate::embedding::{
    AnyEncoder, BinaryCodes, CirculantParams, Generator, Method, DEFAULT_DENSITY,
};
use crate::error::{CbeError, Result};

pub const MATRIX_MAGIC: [u8; 4] = *b"CBEM";
pub const CODES_MAGIC: [u8; 4] = *b"CBEC";
pub const PARAMS_MAGIC: [u8; 4] = *b"CBEP";
pub const FORMAT_VERSION: u32 = 1;

/// Bounds-checked little-endian cursor over a fully loaded file.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(CbeError::Truncated {
                expected: (self.pos as u64).saturating_add(len as u64),
                found: self.bytes.len() as u64,
            }),
        }
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn header(&mut self, magic: [u8; 4]) -> Result<()> {
        let found = self.array::<4>()?;
        if found != magic {
            return Err(CbeError::BadMagic {
                expected: magic,
                found,
            });
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(CbeError::VersionMismatch {
                expected: FORMAT_VERSION,
                found: version,
            });
        }
        Ok(())
    }

    /// The rest of the input, which must be exactly `expected` bytes.
    fn payload(&mut self, expected: Option<u64>) -> Result<&'a [u8]> {
        let found = self.remaining() as u64;
        let Some(expected) = expected else {
            return Err(CbeError::SizeMismatch {
                expected: u64::MAX,
                found,
            });
        };
        if found < expected {
            return Err(CbeError::Truncated { expected, found });
        }
        if found > expected {
            return Err(CbeError::SizeMismatch { expected, found });
        }
        self.take(found as usize)
    }

    fn finish(&self) -> Result<()> {
        match self.remaining() {
            0 => Ok(()),
            extra => Err(CbeError::SizeMismatch {
                expected: self.pos as u64,
                found: (self.pos + extra) as u64,
            }),
        }
    }
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| CbeError::InvalidData(format!("dimension {v} too large")))
}

fn load(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CbeError::from(e).at_path(path))
}

fn store(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CbeError::from(e).at_path(path))
}

fn read_all(mut r: impl Read) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn encode_matrix_bytes(m: &DataMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 4 * m.as_slice().len());
    out.extend_from_slice(&MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n() as u64).to_le_bytes());
    out.extend_from_slice(&(m.d() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_matrix_bytes(bytes: &[u8]) -> Result<DataMatrix> {
    let mut cur = Cursor::new(bytes);
    cur.header(MATRIX_MAGIC)?;
    let n = cur.u64()?;
    let d = cur.u64()?;
    let expected = n.checked_mul(d).and_then(|e| e.checked_mul(4));
    let payload = cur.payload(expected)?;
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DataMatrix::new(to_usize(n)?, to_usize(d)?, data)
}

pub fn write_matrix_to(mut w: impl Write, m: &DataMatrix) -> Result<()> {
    w.write_all(&encode_matrix_bytes(m))?;
    Ok(())
}

pub fn read_matrix_from(r: impl Read) -> Result<DataMatrix> {
    decode_matrix_bytes(&read_all(r)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DataMatrix) -> Result<()> {
    store(path.as_ref(), &encode_matrix_bytes(m))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    decode_matrix_bytes(&load(path)?).map_err(|e| e.at_path(path))
}

fn encode_codes_bytes(c: &BinaryCodes) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + c.packed().len());
    out.extend_from_slice(&CODES_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(c.n() as u64).to_le_bytes());
    out.extend_from_slice(&(c.k() as u64).to_le_bytes());
    out.extend_from_slice(c.packed());
    out
}

fn decode_codes_bytes(bytes: &[u8]) -> Result<BinaryCodes> {
    let mut cur = Cursor::new(bytes);
    cur.header(CODES_MAGIC)?;
    let n = cur.u64()?;
    let k = cur.u64()?;
    let expected = n.checked_mul(k.div_ceil(8));
    let payload = cur.payload(expected)?;
    BinaryCodes::from_packed(to_usize(n)?, to_usize(k)?, payload.to_vec())
}

pub fn write_codes_to(mut w: impl Write, c: &BinaryCodes) -> Result<()> {
    w.write_all(&encode_codes_bytes(c))?;
    Ok(())
}

pub fn read_codes_from(r: impl Read) -> Result<BinaryCodes> {
    decode_codes_bytes(&read_all(r)?)
}

pub fn write_codes(path: impl AsRef<Path>, c: &BinaryCodes) -> Result<()> {
    store(path.as_ref(), &encode_codes_bytes(c))
}

pub fn read_codes(path: impl AsRef<Path>) -> Result<BinaryCodes> {
    let path = path.as_ref();
    decode_codes_bytes(&load(path)?).map_err(|e| e.at_path(path))
}

/// Serialized encoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub method: Method,
    pub d: usize,
    pub k: usize,
    pub seed: u64,
    /// FJLT nonzero density; ignored by the other methods.
    pub density: f64,
    /// Present exactly for the circulant methods.
    pub circulant: Option<CirculantParams>,
}

impl ParamsFile {
    pub fn circulant(method: Method, seed: u64, params: CirculantParams) -> Self {
        Self {
            method,
            d: params.dim(),
            k: params.k(),
            seed,
            density: DEFAULT_DENSITY,
            circulant: Some(params),
        }
    }

    pub fn seeded(method: Method, d: usize, k: usize, seed: u64, density: f64) -> Self {
        Self {
            method,
            d,
            k,
            seed,
            density,
            circulant: None,
        }
    }

    pub fn to_encoder(&self) -> Result<AnyEncoder> {
        match (&self.circulant, self.method.is_circulant()) {
            (Some(p), true) => Ok(AnyEncoder::Circulant(p.clone())),
            (None, false) => {
                AnyEncoder::random(self.method, self.d, self.k, self.seed, self.density)
            }
            _ => Err(CbeError::InvalidData(format!(
                "params for {} are inconsistent with their method",
                self.method
            ))),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&PARAMS_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.method.tag());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        out.extend_from_slice(&(self.k as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.density.to_le_bytes());
        let generators = self.circulant.as_ref().map_or(&[][..], |p| p.generators());
        out.extend_from_slice(&(generators.len() as u32).to_le_bytes());
        for g in generators {
            for v in g.r() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend(g.signs().iter().map(|&s| s as u8));
        }
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        cur.header(PARAMS_MAGIC)?;
        let tag = cur.u8()?;
        let method = Method::from_tag(tag)
            .ok_or_else(|| CbeError::InvalidData(format!("unknown method tag {tag}")))?;
        let d = to_usize(cur.u64()?)?;
        let k = to_usize(cur.u64()?)?;
        let seed = cur.u64()?;
        let density = cur.f64()?;
        let count = cur.u32()? as usize;
        let per_generator = d
            .checked_mul(9)
            .ok_or_else(|| CbeError::InvalidData("dimension too large".into()))?;
        if count
            .checked_mul(per_generator)
            .is_none_or(|need| need > cur.remaining())
        {
            return Err(CbeError::Truncated {
                expected: (cur.pos as u64)
                    .saturating_add((count as u64).saturating_mul(per_generator as u64)),
                found: bytes.len() as u64,
            });
        }
        let mut generators = Vec::with_capacity(count);
        for _ in 0..count {
            let r = cur
                .take(8 * d)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let signs = cur.take(d)?.iter().map(|&b| b as i8).collect();
            generators
                .push(Generator::new(r, signs).map_err(|e| CbeError::InvalidData(e.to_string()))?);
        }
        cur.finish()?;
        let circulant = if generators.is_empty() {
            None
        } else {
            Some(
                CirculantParams::with_generators(generators, k)
                    .map_err(|e| CbeError::InvalidData(e.to_string()))?,
            )
        };
        let file = Self {
            method,
            d,
            k,
            seed,
            density,
            circulant,
        };
        if file.method.is_circulant() != file.circulant.is_some() {
            return Err(CbeError::InvalidData(format!(
                "{} params with {count} generators",
                file.method
            )));
        }
        Ok(file)
    }
}

pub fn write_params_to(mut w: impl Write, p: &ParamsFile) -> Result<()> {
    w.write_all(&p.to_bytes())?;
    Ok(())
}

pub fn read_params_from(r: impl Read) -> Result<ParamsFile> {
    ParamsFile::from_bytes(&read_all(r)?)
}

pub fn write_params(path: impl AsRef<Path>, p: &ParamsFile) -> Result<()> {
    store(path.as_ref(), &p.to_bytes())
}

pub fn read_params(path: impl AsRef<Path>) -> Result<ParamsFile> {
    let path = path.as_ref();
    ParamsFile::from_bytes(&load(path)?).map_err(|e| e.at_path(path))
}
