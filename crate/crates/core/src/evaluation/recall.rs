use rayon::prelude::*;

use crate::embedding::{hamming_packed, BinaryCodes};
use crate::error::{CbeError, Result};

/// Mean recall@m over queries for `m = 1..=m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCurve {
    pub method: String,
    pub bits: usize,
    pub m_values: Vec<usize>,
    pub recall_at_m: Vec<f64>,
    pub encode_time_ns_per_point: f64,
}

impl RecallCurve {
    pub fn labeled(mut self, method: impl Into<String>, encode_time_ns_per_point: f64) -> Self {
        self.method = method.into();
        self.encode_time_ns_per_point = encode_time_ns_per_point;
        self
    }

    pub fn at(&self, m: usize) -> Option<f64> {
        m.checked_sub(1)
            .and_then(|i| self.recall_at_m.get(i))
            .copied()
    }
}

/// Database indices ordered by Hamming distance to query row `q`, ties by
/// lower index. Counting sort over the `k + 1` possible distances.
pub fn hamming_ranking(db: &BinaryCodes, queries: &BinaryCodes, q: usize) -> Vec<usize> {
    let k = db.k();
    let query = queries.row(q);
    let dist: Vec<u32> = (0..db.n())
        .map(|i| hamming_packed(db.row(i), query))
        .collect();
    let mut start = vec![0usize; k + 2];
    for &t in &dist {
        start[t as usize + 1] += 1;
    }
    for t in 1..start.len() {
        start[t] += start[t - 1];
    }
    let mut order = vec![0; db.n()];
    for (i, &t) in dist.iter().enumerate() {
        order[start[t as usize]] = i;
        start[t as usize] += 1;
    }
    order
}

/// Ranks the database for each query by Hamming distance and averages
/// `|top-m ∩ truth| / |truth|` over queries.
pub fn recall_at_m(
    codes_db: &BinaryCodes,
    codes_q: &BinaryCodes,
    truth: &[Vec<usize>],
    m_max: usize,
) -> Result<RecallCurve> {
    let n = codes_db.n();
    if codes_db.k() != codes_q.k() {
        return Err(CbeError::ShapeMismatch {
            what: "code bits",
            expected: codes_db.k(),
            actual: codes_q.k(),
        });
    }
    if truth.len() != codes_q.n() {
        return Err(CbeError::ShapeMismatch {
            what: "ground-truth lists",
            expected: codes_q.n(),
            actual: truth.len(),
        });
    }
    if m_max == 0 || m_max > n {
        return Err(CbeError::invalid(format!(
            "m_max = {m_max} must be in 1..={n}"
        )));
    }
    if codes_q.n() == 0 {
        return Err(CbeError::invalid("no queries"));
    }
    for list in truth {
        if list.is_empty() {
            return Err(CbeError::invalid("empty ground-truth list"));
        }
        if let Some(&i) = list.iter().find(|&&i| i >= n) {
            return Err(CbeError::OutOfRange { index: i, len: n });
        }
    }
    let per_query: Vec<Vec<f64>> = (0..codes_q.n())
        .into_par_iter()
        .map(|q| {
            let mut relevant = vec![false; n];
            for &i in &truth[q] {
                relevant[i] = true;
            }
            let total = relevant.iter().filter(|&&r| r).count() as f64;
            let mut hits = 0usize;
            hamming_ranking(codes_db, codes_q, q)
                .into_iter()
                .take(m_max)
                .map(|i| {
                    hits += usize::from(relevant[i]);
                    hits as f64 / total
                })
                .collect()
        })
        .collect();
    let mut sums = vec![0.0; m_max];
    for curve in &per_query {
        for (s, v) in sums.iter_mut().zip(curve) {
            *s += v;
        }
    }
    let nq = per_query.len() as f64;
    Ok(RecallCurve {
        method: String::new(),
        bits: codes_db.k(),
        m_values: (1..=m_max).collect(),
        recall_at_m: sums.into_iter().map(|s| s / nq).collect(),
        encode_time_ns_per_point: 0.0,
    })
}
