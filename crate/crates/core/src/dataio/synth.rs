use rand::Rng;
use rand_distr::StandardNormal;

use super::{normalize_rows, DataMatrix};
use crate::embedding::rng_from_seed;
use crate::error::{CbeError, Result};

fn unit_gaussian(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// i.i.d. standard normal rows, normalized to unit length.
pub fn synth_gaussian(n: usize, d: usize, seed: u64) -> Result<DataMatrix> {
    if d == 0 {
        return Err(CbeError::invalid("dimension must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        data.extend(unit_gaussian(d, &mut rng).into_iter().map(|v| v as f32));
    }
    normalize_rows(&DataMatrix::new(n, d, data)?)
}

/// Rows scattered around `n_clusters` random unit centers. Row `i` belongs
/// to cluster `i % n_clusters` and is `center + spread * g / sqrt(d)` with
/// `g` standard normal, then normalized.
pub fn synth_clustered(
    n: usize,
    d: usize,
    n_clusters: usize,
    spread: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if d == 0 {
        return Err(CbeError::invalid("dimension must be positive"));
    }
    if n_clusters == 0 || n_clusters > n {
        return Err(CbeError::invalid(format!(
            "cluster count {n_clusters} must be in 1..={n}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(CbeError::invalid(format!(
            "spread {spread} must be finite and >= 0"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let centers: Vec<Vec<f64>> = (0..n_clusters)
        .map(|_| unit_gaussian(d, &mut rng))
        .collect();
    let scale = spread / (d as f64).sqrt();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let center = &centers[i % n_clusters];
        let row: Vec<f64> = center
            .iter()
            .map(|&c| c + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        data.extend(row.iter().map(|&v| (v / norm) as f32));
    }
    normalize_rows(&DataMatrix::new(n, d, data)?)
}
