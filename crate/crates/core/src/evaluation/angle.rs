use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::embedding::{cbe_encode, cbe_random, hamming_packed, rng_from_seed};
use crate::error::{CbeError, Result};

/// Monte-Carlo statistics of the normalized Hamming distance between the
/// codes of a fixed pair, over random `(r, D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleStats {
    pub theta: f64,
    pub k: usize,
    pub trials: usize,
    pub mean_normalized_hamming: f64,
    pub empirical_variance: f64,
    pub rho: f64,
}

impl AngleStats {
    /// `(1/k)(θ/π)(1 − θ/π) + 32ρ`.
    pub fn bound(&self) -> f64 {
        variance_bound(self.theta, self.k, self.rho)
    }

    /// Standard error of the mean, from the empirical variance.
    pub fn standard_error(&self) -> f64 {
        (self.empirical_variance / self.trials as f64).sqrt()
    }
}

pub fn variance_bound(theta: f64, k: usize, rho: f64) -> f64 {
    let p = theta / PI;
    p * (1.0 - p) / k as f64 + 32.0 * rho
}

/// Unit vectors at angle `theta`: `x` is the normalized all-ones vector and
/// `y = cos θ x + sin θ z` with `z` the normalized alternating-sign vector.
pub fn angle_pair(theta: f64, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(CbeError::invalid(format!(
            "d = {d} must be even and at least 2"
        )));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(CbeError::invalid(format!(
            "theta = {theta} must be in [0, pi]"
        )));
    }
    let s = 1.0 / (d as f64).sqrt();
    let x = vec![s; d];
    let (sin, cos) = theta.sin_cos();
    let y = (0..d)
        .map(|i| {
            let z = if i % 2 == 0 { s } else { -s };
            cos * s + sin * z
        })
        .collect();
    Ok((x, y))
}

/// Largest `‖v‖∞ / ‖v‖₂` over the given vectors.
pub fn spread_ratio(vectors: &[&[f64]]) -> f64 {
    vectors
        .iter()
        .map(|v| {
            let inf = v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let two = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            if two > 0.0 {
                inf / two
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Encodes the [`angle_pair`] under `trials` independent circulant
/// embeddings and reports the mean and unbiased variance of the fraction
/// of differing bits.
pub fn angle_experiment(
    theta: f64,
    d: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<AngleStats> {
    if trials < 2 {
        return Err(CbeError::invalid(format!(
            "trials = {trials} must be at least 2"
        )));
    }
    if k == 0 {
        return Err(CbeError::invalid("k must be at least 1"));
    }
    let (x, y) = angle_pair(theta, d)?;
    let mut master = rng_from_seed(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| master.random()).collect();
    let samples = seeds
        .par_iter()
        .map(|&s| -> Result<f64> {
            let params = cbe_random(d, k, s)?;
            let cx = cbe_encode(&params, &x)?;
            let cy = cbe_encode(&params, &y)?;
            Ok(f64::from(hamming_packed(&cx, &cy)) / k as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(AngleStats {
        theta,
        k,
        trials,
        mean_normalized_hamming: mean,
        empirical_variance: variance,
        rho: spread_ratio(&[&x, &y]),
    })
}
