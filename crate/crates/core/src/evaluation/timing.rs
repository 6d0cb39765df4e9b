use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use crate::dataio::synth_gaussian;
use crate::embedding::{
    cbe_random, row_bytes, BilinearParams, Encoder, FjltParams, LshParams, DEFAULT_DENSITY,
};
use crate::error::{CbeError, Result};

/// Projection families compared by the timing benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimingMethod {
    /// Dense `k x d` Gaussian projection.
    Full,
    Bilinear,
    Circulant,
    Fjlt,
}

impl TimingMethod {
    pub const ALL: [TimingMethod; 4] = [
        TimingMethod::Full,
        TimingMethod::Bilinear,
        TimingMethod::Circulant,
        TimingMethod::Fjlt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimingMethod::Full => "full",
            TimingMethod::Bilinear => "bilinear",
            TimingMethod::Circulant => "circulant",
            TimingMethod::Fjlt => "fjlt",
        }
    }
}

impl fmt::Display for TimingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimingMethod {
    type Err = CbeError;

    fn from_str(s: &str) -> Result<Self> {
        TimingMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CbeError::invalid(format!("unknown timing method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    /// Measured repetitions; the reported time is their median.
    pub reps: usize,
    pub warmups: usize,
    /// Each repetition encodes the point enough times to take at least this long.
    pub min_rep_ns: u64,
    /// Largest dense projection matrix that is allocated.
    pub dense_budget_bytes: usize,
    /// Over budget, time a row subset of the dense matrix and scale up
    /// linearly in `k`. Otherwise the cell is reported as out of memory.
    pub extrapolate_dense: bool,
    pub density: f64,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            reps: 5,
            warmups: 3,
            min_rep_ns: 2_000_000,
            dense_budget_bytes: 1 << 30,
            extrapolate_dense: true,
            density: DEFAULT_DENSITY,
            seed: 0,
        }
    }
}

/// One benchmark cell. `ns_per_point` is `None` when the parameters do not
/// fit in the memory budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRecord {
    pub method: TimingMethod,
    pub d: usize,
    pub k: usize,
    pub ns_per_point: Option<f64>,
    /// Projection rows actually evaluated; below `k` the time is scaled up.
    pub rows_measured: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall-clock nanoseconds for one `encode_into` call on `x`.
pub fn time_encoder(encoder: &dyn Encoder, x: &[f64], config: &TimingConfig) -> Result<f64> {
    if config.reps == 0 {
        return Err(CbeError::invalid("reps must be at least 1"));
    }
    let mut row = vec![0u8; row_bytes(encoder.bits())];
    let mut run = |count: usize| -> Result<f64> {
        let start = Instant::now();
        for _ in 0..count {
            row.fill(0);
            encoder.encode_into(black_box(x), &mut row)?;
            black_box(&row);
        }
        Ok(start.elapsed().as_nanos() as f64)
    };
    let mut inner = 1usize;
    while run(inner)? < config.min_rep_ns as f64 && inner < 1 << 24 {
        inner *= 2;
    }
    for _ in 0..config.warmups {
        run(inner)?;
    }
    let samples = (0..config.reps)
        .map(|_| Ok(run(inner)? / inner as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(median(samples))
}

/// Times `method` at `(d, k)` on a single thread.
pub fn time_method(
    method: TimingMethod,
    d: usize,
    k: usize,
    config: &TimingConfig,
) -> Result<TimingRecord> {
    if d == 0 || !d.is_power_of_two() {
        return Err(CbeError::invalid(format!("d = {d} is not a power of two")));
    }
    let x = synth_gaussian(1, d, config.seed ^ 0x5eed)?.row_f64(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| CbeError::invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut rows_measured = k;
        let encoder: Box<dyn Encoder> = match method {
            TimingMethod::Full => {
                let bytes = k.saturating_mul(d).saturating_mul(4);
                if bytes > config.dense_budget_bytes {
                    if !config.extrapolate_dense {
                        return Ok(TimingRecord {
                            method,
                            d,
                            k,
                            ns_per_point: None,
                            rows_measured: 0,
                        });
                    }
                    rows_measured = (config.dense_budget_bytes / (4 * d)).clamp(1, k);
                }
                Box::new(LshParams::random(d, rows_measured, config.seed)?)
            }
            TimingMethod::Bilinear => Box::new(BilinearParams::random(d, k, config.seed)?),
            TimingMethod::Circulant => Box::new(cbe_random(d, k, config.seed)?),
            TimingMethod::Fjlt => Box::new(FjltParams::random(d, k, config.density, config.seed)?),
        };
        let ns = time_encoder(encoder.as_ref(), &x, config)?;
        Ok(TimingRecord {
            method,
            d,
            k,
            ns_per_point: Some(ns * k as f64 / rows_measured as f64),
            rows_measured,
        })
    })
}

/// Per-point encode time for every `(method, d)` with `k = d`.
pub fn timing_bench(
    d_values: &[usize],
    methods: &[TimingMethod],
    config: &TimingConfig,
) -> Result<Vec<TimingRecord>> {
    let mut out = Vec::with_capacity(d_values.len() * methods.len());
    for &d in d_values {
        for &method in methods {
            out.push(time_method(method, d, d, config)?);
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln(time)` against `ln(d)` over measured records.
pub fn loglog_slope(records: &[TimingRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.ns_per_point.map(|t| ((r.d as f64).ln(), t.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Measured per-point encode times of one method at fixed `d` over a grid
/// of code lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCalibration {
    pub method: TimingMethod,
    pub d: usize,
    /// `(k, ns_per_point)`, increasing in `k`.
    pub points: Vec<(usize, f64)>,
}

/// Powers of two from 8 up to `k_max`, plus `k_max` itself.
pub fn k_grid(k_max: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = std::iter::successors(Some(8usize), |k| k.checked_mul(2))
        .take_while(|&k| k < k_max)
        .collect();
    if k_max >= 8 {
        ks.push(k_max);
    }
    ks
}

/// Times `method` at each `k` in `k_values` (sorted ascending). Stops after
/// the first measurement above `cap_ns`, since larger `k` only costs more.
pub fn calibrate(
    method: TimingMethod,
    d: usize,
    k_values: &[usize],
    cap_ns: Option<f64>,
    config: &TimingConfig,
) -> Result<TimeCalibration> {
    if k_values.is_empty() || k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CbeError::invalid(
            "k values must be non-empty and strictly increasing",
        ));
    }
    let mut points = Vec::new();
    for &k in k_values {
        let Some(ns) = time_method(method, d, k, config)?.ns_per_point else {
            break;
        };
        points.push((k, ns));
        if cap_ns.is_some_and(|cap| ns > cap) {
            break;
        }
    }
    Ok(TimeCalibration { method, d, points })
}

/// Largest calibrated `k` whose encode time is within `budget_ns`. Times
/// are made non-decreasing in `k` first (running maximum) so a larger
/// budget never yields fewer bits.
pub fn fixed_time_bits(calibration: &TimeCalibration, budget_ns: f64) -> Result<usize> {
    let mut best = None;
    let mut running = 0.0f64;
    for &(k, ns) in &calibration.points {
        running = running.max(ns);
        if running <= budget_ns {
            best = Some(k);
        } else {
            break;
        }
    }
    best.ok_or_else(|| {
        CbeError::invalid(format!(
            "budget {budget_ns} ns is below the {} time at the smallest calibrated k",
            calibration.method
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast() -> TimingConfig {
        TimingConfig {
            reps: 3,
            warmups: 1,
            min_rep_ns: 100_000,
            ..TimingConfig::default()
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in TimingMethod::ALL {
            assert_eq!(m.name().parse::<TimingMethod>().unwrap(), m);
        }
        assert!("dense".parse::<TimingMethod>().is_err());
    }

    #[test]
    fn bench_covers_every_cell() {
        let recs = timing_bench(&[64, 128], &TimingMethod::ALL, &fast()).unwrap();
        assert_eq!(recs.len(), 8);
        assert!(recs
            .iter()
            .all(|r| r.ns_per_point.unwrap() > 0.0 && r.k == r.d));
    }

    #[test]
    fn over_budget_dense_is_scaled_or_reported() {
        let mut c = fast();
        c.dense_budget_bytes = 4 * 256 * 32;
        let r = time_method(TimingMethod::Full, 256, 256, &c).unwrap();
        assert_eq!(r.rows_measured, 32);
        assert!(r.ns_per_point.is_some());
        c.extrapolate_dense = false;
        let r = time_method(TimingMethod::Full, 256, 256, &c).unwrap();
        assert_eq!(r.ns_per_point, None);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let recs: Vec<TimingRecord> = [16usize, 32, 64, 128]
            .iter()
            .map(|&d| TimingRecord {
                method: TimingMethod::Full,
                d,
                k: d,
                ns_per_point: Some(3.0 * (d * d) as f64),
                rows_measured: d,
            })
            .collect();
        assert!((loglog_slope(&recs).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&recs[..1]), None);
    }

    #[test]
    fn grid() {
        assert_eq!(k_grid(64), vec![8, 16, 32, 64]);
        assert_eq!(k_grid(100), vec![8, 16, 32, 64, 100]);
        assert!(k_grid(4).is_empty());
    }

    #[test]
    fn fixed_time_is_monotone() {
        let cal = TimeCalibration {
            method: TimingMethod::Full,
            d: 64,
            points: vec![(8, 10.0), (16, 25.0), (32, 20.0), (64, 80.0)],
        };
        assert!(fixed_time_bits(&cal, 5.0).is_err());
        assert_eq!(fixed_time_bits(&cal, 10.0).unwrap(), 8);
        assert_eq!(fixed_time_bits(&cal, 24.0).unwrap(), 8);
        assert_eq!(fixed_time_bits(&cal, 25.0).unwrap(), 32);
        assert_eq!(fixed_time_bits(&cal, 1e9).unwrap(), 64);
        let mut last = 0;
        for b in [10.0, 15.0, 22.0, 30.0, 79.0, 81.0] {
            let k = fixed_time_bits(&cal, b).unwrap();
            assert!(k >= last);
            last = k;
        }
    }

    #[test]
    fn own_time_returns_full_length() {
        let c = fast();
        let cal = calibrate(TimingMethod::Circulant, 256, &k_grid(256), None, &c).unwrap();
        let own = cal.points.iter().map(|p| p.1).fold(0.0, f64::max);
        assert_eq!(fixed_time_bits(&cal, own).unwrap(), 256);
    }
}
