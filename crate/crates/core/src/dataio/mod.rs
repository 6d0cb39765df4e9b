//! Data matrices, on-disk formats, and synthetic data.

mod format;
mod synth;

pub use format::{
    read_codes, read_codes_from, read_matrix, read_matrix_from, read_params, read_params_from,
    write_codes, write_codes_to, write_matrix, write_matrix_to, write_params, write_params_to,
    ParamsFile, CODES_MAGIC, FORMAT_VERSION, MATRIX_MAGIC, PARAMS_MAGIC,
};
pub use synth::{synth_clustered, synth_gaussian};

use crate::error::{CbeError, Result};

/// `n x d` row-major matrix of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    data: Vec<f32>,
}

impl DataMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        let expected = n
            .checked_mul(d)
            .ok_or_else(|| CbeError::invalid("matrix size overflows"))?;
        if data.len() != expected {
            return Err(CbeError::ShapeMismatch {
                what: "matrix entries",
                expected,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(CbeError::InvalidData(format!(
                "entry ({}, {}) is not finite",
                i / d.max(1),
                i % d.max(1)
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != d {
                return Err(CbeError::invalid(format!(
                    "row {i} has {} columns, expected {d}",
                    r.as_ref().len()
                )));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.d.max(1)).take(self.n)
    }

    /// Rows `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(CbeError::OutOfRange {
                    index: i,
                    len: self.n,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d, data)
    }

    /// True if every row has unit norm within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.rows().all(|r| (row_norm(r) - 1.0).abs() <= tol)
    }
}

fn row_norm(row: &[f32]) -> f64 {
    row.iter()
        .map(|&v| f64::from(v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Scales every row to unit norm. Zero rows are an error listing all of them.
pub fn normalize_rows(m: &DataMatrix) -> Result<DataMatrix> {
    let zero: Vec<usize> = m
        .rows()
        .enumerate()
        .filter(|(_, r)| row_norm(r) == 0.0)
        .map(|(i, _)| i)
        .collect();
    if !zero.is_empty() {
        return Err(CbeError::ZeroRows(zero));
    }
    let mut data = Vec::with_capacity(m.data.len());
    for r in m.rows() {
        let norm = row_norm(r);
        data.extend(r.iter().map(|&v| (f64::from(v) / norm) as f32));
    }
    DataMatrix::new(m.n, m.d, data)
}
