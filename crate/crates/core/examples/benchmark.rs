//! Runs the benchmark harness end to end with the mock backend and writes
//! the CSV, summary, and rate plots.
//!
//! cargo run --example benchmark -- [images] [out_dir]

use std::path::PathBuf;

use textsketch::core::TokenCoding;
use textsketch::decoder::MockBackend;
use textsketch::evaluation::{
    run_benchmark, write_outputs, BenchmarkSettings, RandomProjectionFeatures,
};
use textsketch::inversion::PiConfig;
use textsketch::pipeline::{Decoder, Encoder, StandInSettings, StandIns};
use textsketch::sketch::{train_ntc, GradientEdgeDetector, NtcTrainConfig};
use textsketch::synthetic::{synthetic_scenes, synthetic_sketches};

fn main() -> textsketch::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count = args.first().and_then(|a| a.parse().ok()).unwrap_or(8);
    let out = PathBuf::from(args.get(1).map_or("benchmark_out", String::as_str));

    let cfg = NtcTrainConfig {
        epochs: 2,
        lambdas: vec![4.0],
        ..NtcTrainConfig::default()
    };
    let model = train_ntc(&synthetic_sketches(80, 96, 96, 10_000)?, &cfg)?.model;
    let parts = StandIns::new(&StandInSettings::default())?;
    let encoder = Encoder {
        embedder: &parts.embedder,
        tokenizer: &parts.tokenizer,
        detector: &GradientEdgeDetector,
        sketch_model: Some(&model),
        pi: PiConfig {
            step_count: 400,
            ..PiConfig::default()
        },
        token_coding: TokenCoding::FixedWidth,
    };
    let backend = MockBackend::default();
    let decoder = Decoder {
        tokenizer: &parts.tokenizer,
        prompt_length: encoder.pi.prompt_length,
        sketch_model: Some(&model),
        backend: &backend,
    };
    let data: Vec<_> = synthetic_scenes(count, 96, 96, 0)?
        .into_iter()
        .enumerate()
        .map(|(i, img)| (format!("scene{i:03}"), img))
        .collect();
    let outcome = run_benchmark(
        &data,
        &encoder,
        &decoder,
        &RandomProjectionFeatures::default(),
        &BenchmarkSettings::default(),
    )?;
    for m in &outcome.summary.modes {
        println!(
            "{:<5} n={} bpp {:.4} d_clip {:.4} ms_ssim {:.4} fid {:.4} kid {:.4}",
            m.mode,
            m.count,
            m.mean_bpp.unwrap_or(f64::NAN),
            m.mean_d_clip.unwrap_or(f64::NAN),
            m.mean_ms_ssim.unwrap_or(f64::NAN),
            m.fid.unwrap_or(f64::NAN),
            m.kid.unwrap_or(f64::NAN)
        );
    }
    for path in write_outputs(&outcome, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
