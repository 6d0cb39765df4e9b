//! The training objective
//! `||B - X R^T||_F^2 + lambda ||R R^T - I||_F^2 + mu J(R)`,
//! evaluated either directly in the signal domain or from the
//! frequency-domain statistics.

use num_complex::Complex64;

use super::stats::{FrequencyStats, TargetMatrix};
use super::PairConstraints;
use crate::dataio::DataMatrix;
use crate::embedding::CirculantParams;
use crate::error::{check_len, Result};

/// `||circ(r) circ(r)^T - I||_F^2` from the circular autocorrelation of `r`.
/// `circ(r) circ(r)^T` is circulant with first row `a[s] = sum_u r[u] r[u+s]`,
/// so the squared norm is `d * sum_s (a[s] - delta[s])^2`. O(d^2).
pub fn orthogonality_penalty(r: &[f64]) -> f64 {
    let d = r.len();
    let mut total = 0.0;
    for s in 0..d {
        let a: f64 = (0..d).map(|u| r[u] * r[(u + s) % d]).sum();
        let delta = if s == 0 { 1.0 } else { 0.0 };
        total += (a - delta).powi(2);
    }
    d as f64 * total
}

/// Frequency-domain form of the penalty, `sum_l (|r~_l|^2 - 1)^2`.
pub fn spectral_penalty(spectrum: &[Complex64]) -> f64 {
    spectrum.iter().map(|v| (v.norm_sqr() - 1.0).powi(2)).sum()
}

/// Signal-domain objective. `x` is the raw data; the sign diagonal of
/// `params` is applied before the circulant projection.
pub fn objective(
    params: &CirculantParams,
    x: &DataMatrix,
    b: &TargetMatrix,
    lambda: f64,
    mu: f64,
    constraints: &PairConstraints,
) -> Result<f64> {
    check_len("data columns", params.dim(), x.d())?;
    check_len("target rows", x.n(), b.n())?;
    check_len("target columns", x.d(), b.d())?;
    let g = params.primary();
    let mut data_term = 0.0;
    for i in 0..x.n() {
        let proj = g.project(&x.row_f64(i))?;
        data_term += b
            .row(i)
            .iter()
            .zip(&proj)
            .map(|(bv, p)| (bv - p).powi(2))
            .sum::<f64>();
    }
    let mut pair_term = 0.0;
    if mu != 0.0 && !constraints.is_empty() {
        constraints.validate(x.n())?;
        for (pairs, sign) in [(&constraints.similar, 1.0), (&constraints.dissimilar, -1.0)] {
            for &(i, j) in pairs {
                let diff: Vec<f64> = x
                    .row_f64(i)
                    .iter()
                    .zip(x.row_f64(j))
                    .map(|(a, b)| a - b)
                    .collect();
                pair_term += sign * g.project(&diff)?.iter().map(|v| v * v).sum::<f64>();
            }
        }
    }
    Ok(data_term + lambda * orthogonality_penalty(g.r()) + mu * pair_term)
}

/// Frequency-domain objective from the spectrum of `r`, the statistics for
/// the current targets, and `||B||_F^2`.
pub fn spectral_objective(
    spectrum: &[Complex64],
    stats: &FrequencyStats,
    b_frobenius_sq: f64,
    lambda: f64,
) -> f64 {
    let d = spectrum.len() as f64;
    let quad: f64 = spectrum
        .iter()
        .zip(&stats.m_diag)
        .zip(&stats.a_diag)
        .zip(stats.h.iter().zip(&stats.g))
        .map(|(((v, m), a), (h, g))| (m + stats.mu * a) * v.norm_sqr() + h * v.re + g * v.im)
        .sum();
    quad / d + b_frobenius_sq + lambda * spectral_penalty(spectrum)
}
