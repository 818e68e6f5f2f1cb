//! Compresses synthetic scenes in both modes and reconstructs them with the
//! mock backend.
//!
//! cargo run --example mock_pipeline -- [images] [side]

use textsketch::core::{Mode, TokenCoding};
use textsketch::decoder::{edge_correlation, MockBackend};
use textsketch::inversion::PiConfig;
use textsketch::pipeline::{Decoder, Encoder, StandInSettings, StandIns};
use textsketch::sketch::{train_ntc, GradientEdgeDetector, NtcTrainConfig};
use textsketch::synthetic::{synthetic_scenes, synthetic_sketches};

fn main() -> textsketch::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count = args.first().and_then(|a| a.parse().ok()).unwrap_or(4);
    let side = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(128);

    let sketch_cfg = NtcTrainConfig {
        epochs: 2,
        lambdas: vec![0.0625],
        ..NtcTrainConfig::default()
    };
    let model = train_ntc(&synthetic_sketches(60, side, side, 10_000)?, &sketch_cfg)?.model;

    let parts = StandIns::new(&StandInSettings::default())?;
    let encoder = Encoder {
        embedder: &parts.embedder,
        tokenizer: &parts.tokenizer,
        detector: &GradientEdgeDetector,
        sketch_model: Some(&model),
        pi: PiConfig::default(),
        token_coding: TokenCoding::FixedWidth,
    };
    let backend = MockBackend::default();
    let decoder = Decoder {
        tokenizer: &parts.tokenizer,
        prompt_length: encoder.pi.prompt_length,
        sketch_model: Some(&model),
        backend: &backend,
    };

    for (i, image) in synthetic_scenes(count, side, side, 0)?.iter().enumerate() {
        let id = format!("scene{i}");
        let start = std::time::Instant::now();
        let prompt = encoder.invert(image)?;
        for mode in [Mode::Pic, Mode::Pics] {
            let c = encoder.compress_with_prompt(image, &id, mode, &prompt)?;
            let d = decoder.decompress(&c.bytes, &id, 0)?;
            let corr = match &d.sketch {
                Some(s) => format!("{:.3}", edge_correlation(&d.image, s)?),
                None => "-".into(),
            };
            println!(
                "{id} {mode:<4} {:>5} bits {:.5} bpp  edge-corr {corr}  prompt {:?}",
                c.report.total_bits, c.report.bpp, d.text
            );
        }
        println!(
            "{id}: inversion objective {:.4} in {:.1?}",
            prompt.objective,
            start.elapsed()
        );
    }
    Ok(())
}
