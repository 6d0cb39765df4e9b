//! CSV output for benchmark, angle, recall and training-trace results.

use std::io::Write;

use serde::Serialize;

use super::{AngleStats, RecallCurve, TimingRecord};
use crate::error::Result;
use crate::optimizer::TracePoint;

#[derive(Serialize)]
struct TimingRow<'a> {
    method: &'a str,
    d: usize,
    k: usize,
    metric: &'a str,
    value: String,
}

#[derive(Serialize)]
struct AngleRow {
    theta: f64,
    k: usize,
    trials: usize,
    mean: f64,
    variance: f64,
    bound: f64,
}

#[derive(Serialize)]
struct RecallRow<'a> {
    method: &'a str,
    k: usize,
    m: usize,
    recall: f64,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    step: &'static str,
    objective: f64,
}

fn write_rows<T: Serialize>(w: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// `method,d,k,metric,value`. Each record gives an `ns_per_point` row (value
/// `oom` when over the memory budget) and a `rows_measured` row.
pub fn write_timing_csv(w: impl Write, records: &[TimingRecord]) -> Result<()> {
    let rows = records.iter().flat_map(|r| {
        let time = r
            .ns_per_point
            .map_or_else(|| "oom".to_string(), |t| t.to_string());
        [
            ("ns_per_point", time),
            ("rows_measured", r.rows_measured.to_string()),
        ]
        .map(|(metric, value)| TimingRow {
            method: r.method.name(),
            d: r.d,
            k: r.k,
            metric,
            value,
        })
    });
    write_rows(w, rows)
}

/// `theta,k,trials,mean,variance,bound`.
pub fn write_angle_csv(w: impl Write, stats: &[AngleStats]) -> Result<()> {
    write_rows(
        w,
        stats.iter().map(|s| AngleRow {
            theta: s.theta,
            k: s.k,
            trials: s.trials,
            mean: s.mean_normalized_hamming,
            variance: s.empirical_variance,
            bound: s.bound(),
        }),
    )
}

/// `method,k,m,recall`.
pub fn write_recall_csv(w: impl Write, curves: &[RecallCurve]) -> Result<()> {
    write_rows(
        w,
        curves.iter().flat_map(|c| {
            c.m_values
                .iter()
                .zip(&c.recall_at_m)
                .map(move |(&m, &recall)| RecallRow {
                    method: &c.method,
                    k: c.bits,
                    m,
                    recall,
                })
        }),
    )
}

/// `iteration,step,objective`.
pub fn write_trace_csv(w: impl Write, trace: &[TracePoint]) -> Result<()> {
    write_rows(
        w,
        trace.iter().map(|t| TraceRow {
            iteration: t.iteration,
            step: t.step.name(),
            objective: t.objective,
        }),
    )
}
