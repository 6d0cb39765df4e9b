//! Retrieval quality, estimator statistics and encode timing, with CSV
//! output.

mod angle;
mod knn;
mod recall;
mod report;
mod timing;

pub use angle::{angle_experiment, angle_pair, spread_ratio, variance_bound, AngleStats};
pub use knn::ground_truth_knn;
pub use recall::{hamming_ranking, recall_at_m, RecallCurve};
pub use report::{write_angle_csv, write_recall_csv, write_timing_csv, write_trace_csv};
pub use timing::{
    calibrate, fixed_time_bits, k_grid, loglog_slope, time_encoder, time_method, timing_bench,
    TimeCalibration, TimingConfig, TimingMethod, TimingRecord,
};
