use rayon::prelude::*;

use crate::dataio::DataMatrix;
use crate::error::{check_len, CbeError, Result};

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&u, &v)| {
            let t = f64::from(u) - f64::from(v);
            t * t
        })
        .sum()
}

/// Indices of the `g` nearest database rows to each query by Euclidean
/// distance, nearest first; equal distances go to the lower index.
pub fn ground_truth_knn(x: &DataMatrix, queries: &DataMatrix, g: usize) -> Result<Vec<Vec<usize>>> {
    check_len("query columns", x.d(), queries.d())?;
    if g == 0 {
        return Err(CbeError::invalid("g must be at least 1"));
    }
    if g > x.n() {
        return Err(CbeError::invalid(format!(
            "g = {g} exceeds the {} database rows",
            x.n()
        )));
    }
    Ok((0..queries.n())
        .into_par_iter()
        .map(|q| {
            let query = queries.row(q);
            let mut scored: Vec<(f64, usize)> = x
                .rows()
                .enumerate()
                .map(|(i, row)| (squared_distance(query, row), i))
                .collect();
            let order =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if g < scored.len() {
                scored.select_nth_unstable_by(g - 1, order);
                scored.truncate(g);
            }
            scored.sort_unstable_by(order);
            scored.into_iter().map(|(_, i)| i).collect()
        })
        .collect())
}
