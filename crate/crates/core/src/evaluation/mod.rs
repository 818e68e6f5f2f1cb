//! Semantic, perceptual, and realism metrics plus the benchmark harness that
//! emits per-image CSV rows, a dataset summary, and rate curves.

mod benchmark;
mod features;
mod metrics;

pub use benchmark::{
    evaluate_pairs, plot_rate_curve, rows_to_csv, run_benchmark, write_outputs, BenchmarkOutcome,
    BenchmarkRow, BenchmarkSettings, BenchmarkSummary, Failure, Metric, ModeSummary, CSV_COLUMNS,
    GIVEN_MODE,
};
pub use features::{FeatureExtractor, RandomProjectionFeatures};
pub use metrics::{d_clip, d_clip_embeddings, fid, kid, psnr};
