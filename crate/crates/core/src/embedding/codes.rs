use crate::error::{CbeError, Result};

/// Number of bytes holding `bits` packed bits.
pub fn row_bytes(bits: usize) -> usize {
    bits.div_ceil(8)
}

/// Sign rule shared by every encoder: `t >= 0` maps to bit 1.
#[inline]
pub fn sign_bit(t: f64) -> bool {
    t >= 0.0
}

/// Packs `sign_bit(values[i])` into bits `offset + i` of `row` (LSB first).
/// The target bits must already be zero.
pub fn pack_signs(values: &[f64], row: &mut [u8], offset: usize) {
    for (i, &v) in values.iter().enumerate() {
        if sign_bit(v) {
            let bit = offset + i;
            row[bit / 8] |= 1 << (bit % 8);
        }
    }
}

pub fn get_bit(row: &[u8], bit: usize) -> bool {
    row[bit / 8] >> (bit % 8) & 1 == 1
}

/// Hamming distance between two packed rows of equal length.
pub fn hamming_packed(a: &[u8], b: &[u8]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    let mut total = 0;
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        let x = u64::from_le_bytes(x.try_into().unwrap());
        let y = u64::from_le_bytes(y.try_into().unwrap());
        total += (x ^ y).count_ones();
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        total += (x ^ y).count_ones();
    }
    total
}

/// Bit-packed `n x k` code matrix. Row `i`, bit `j` lives at byte `j / 8`
/// of the row, LSB first; bits past `k` are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodes {
    n: usize,
    k: usize,
    packed: Vec<u8>,
}

impl BinaryCodes {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            packed: vec![0; n * row_bytes(k)],
        }
    }

    /// Wraps packed bytes, rejecting a wrong length or set padding bits.
    pub fn from_packed(n: usize, k: usize, packed: Vec<u8>) -> Result<Self> {
        let rb = row_bytes(k);
        let expected = n
            .checked_mul(rb)
            .ok_or_else(|| CbeError::invalid("code matrix size overflows"))?;
        if packed.len() != expected {
            return Err(CbeError::ShapeMismatch {
                what: "packed code bytes",
                expected,
                actual: packed.len(),
            });
        }
        let codes = Self { n, k, packed };
        if let Some(row) = codes.first_corrupt_row() {
            return Err(CbeError::CorruptPadding { row });
        }
        Ok(codes)
    }

    /// Builds codes from `±1` style values, `v >= 0` meaning bit 1.
    pub fn from_signs(n: usize, k: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * k {
            return Err(CbeError::ShapeMismatch {
                what: "sign values",
                expected: n * k,
                actual: values.len(),
            });
        }
        let mut codes = Self::zeros(n, k);
        for i in 0..n {
            pack_signs(&values[i * k..(i + 1) * k], codes.row_mut(i), 0);
        }
        Ok(codes)
    }

    fn first_corrupt_row(&self) -> Option<usize> {
        let rem = self.k % 8;
        if rem == 0 || self.n == 0 {
            return None;
        }
        let mask = !((1u8 << rem) - 1);
        let rb = self.row_bytes();
        (0..self.n).find(|&i| self.packed[i * rb + rb - 1] & mask != 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row_bytes(&self) -> usize {
        row_bytes(self.k)
    }

    pub fn packed(&self) -> &[u8] {
        &self.packed
    }

    pub(crate) fn packed_mut(&mut self) -> &mut [u8] {
        &mut self.packed
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let rb = self.row_bytes();
        &self.packed[i * rb..(i + 1) * rb]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [u8] {
        let rb = self.row_bytes();
        &mut self.packed[i * rb..(i + 1) * rb]
    }

    pub fn bit(&self, i: usize, j: usize) -> bool {
        get_bit(self.row(i), j)
    }

    pub fn hamming(&self, i: usize, j: usize) -> Result<u32> {
        for idx in [i, j] {
            if idx >= self.n {
                return Err(CbeError::OutOfRange {
                    index: idx,
                    len: self.n,
                });
            }
        }
        Ok(hamming_packed(self.row(i), self.row(j)))
    }

    /// Hamming distance between row `i` of `self` and row `j` of `other`.
    pub fn hamming_to(&self, i: usize, other: &BinaryCodes, j: usize) -> Result<u32> {
        if self.k != other.k {
            return Err(CbeError::ShapeMismatch {
                what: "code length",
                expected: self.k,
                actual: other.k,
            });
        }
        if i >= self.n {
            return Err(CbeError::OutOfRange {
                index: i,
                len: self.n,
            });
        }
        if j >= other.n {
            return Err(CbeError::OutOfRange {
                index: j,
                len: other.n,
            });
        }
        Ok(hamming_packed(self.row(i), other.row(j)))
    }

    /// Copy with every bit of every row flipped (padding stays zero).
    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        let rb = self.row_bytes();
        let rem = self.k % 8;
        for row in out.packed.chunks_exact_mut(rb.max(1)).take(self.n) {
            for b in row.iter_mut() {
                *b = !*b;
            }
            if rem != 0 {
                row[rb - 1] &= (1u8 << rem) - 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codes(n: usize, k: usize, seed: u64) -> BinaryCodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        BinaryCodes::from_signs(n, k, &values).unwrap()
    }

    #[test]
    fn packing_is_lsb_first() {
        let codes =
            BinaryCodes::from_signs(1, 10, &[1., -1., 1., -1., 1., -1., 1., -1., 1., 1.]).unwrap();
        assert_eq!(codes.packed(), &[0b0101_0101, 0b0000_0011]);
    }

    #[test]
    fn self_and_complement_distance() {
        let codes = random_codes(3, 77, 1);
        assert_eq!(codes.hamming(1, 1).unwrap(), 0);
        let comp = codes.complement();
        for i in 0..3 {
            assert_eq!(codes.hamming_to(i, &comp, i).unwrap(), 77);
        }
        assert!(BinaryCodes::from_packed(3, 77, comp.packed().to_vec()).is_ok());
    }

    #[test]
    fn matches_bitwise_loop() {
        let codes = random_codes(2, 1000, 9);
        let slow = (0..1000)
            .filter(|&j| codes.bit(0, j) != codes.bit(1, j))
            .count() as u32;
        assert_eq!(codes.hamming(0, 1).unwrap(), slow);
    }

    #[test]
    fn rejects_out_of_range_and_padding() {
        let codes = random_codes(2, 12, 2);
        assert!(matches!(
            codes.hamming(0, 2),
            Err(CbeError::OutOfRange { index: 2, len: 2 })
        ));
        let mut bytes = codes.packed().to_vec();
        bytes[3] |= 0x80;
        assert!(matches!(
            BinaryCodes::from_packed(2, 12, bytes),
            Err(CbeError::CorruptPadding { row: 1 })
        ));
    }

    proptest! {
        #[test]
        fn metric_axioms(seed in 0u64..1000, k in 1usize..200) {
            let c = random_codes(3, k, seed);
            let (ab, bc, ac) = (c.hamming(0, 1).unwrap(), c.hamming(1, 2).unwrap(), c.hamming(0, 2).unwrap());
            prop_assert_eq!(ab, c.hamming(1, 0).unwrap());
            prop_assert!(ac <= ab + bc);
            prop_assert!(ab as usize <= k);
        }
    }
}
