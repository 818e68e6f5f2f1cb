//! Extracts an edge-map sketch, codes it with a sketch model, and writes the
//! original and decoded sketches as PNGs.
//!
//! cargo run --example sketch_roundtrip -- [model.ntc] [image.png] [out_dir]
//!
//! Without a model a small one is trained on synthetic sketches first.

use std::path::PathBuf;

use textsketch::core::Image;
use textsketch::sketch::{
    decode_sketch, encode_sketch, estimate_payload_bits, extract_sketch, ms_ssim, train_ntc,
    GradientEdgeDetector, NtcModel, NtcTrainConfig,
};
use textsketch::synthetic::{synthetic_scene, synthetic_sketches};

fn main() -> textsketch::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = match args.first().filter(|a| a.as_str() != "-") {
        Some(path) => NtcModel::load(path)?,
        None => {
            let cfg = NtcTrainConfig {
                epochs: 3,
                lambdas: vec![4.0],
                ..NtcTrainConfig::default()
            };
            train_ntc(&synthetic_sketches(150, 128, 128, 10)?, &cfg)?.model
        }
    };
    let image = match args.get(1) {
        Some(path) => Image::load(path)?,
        None => synthetic_scene(128, 128, 99)?,
    };
    let out = PathBuf::from(args.get(2).map_or("sketch_roundtrip", String::as_str));
    std::fs::create_dir_all(&out).map_err(|e| textsketch::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let sketch = extract_sketch(&image, &GradientEdgeDetector)?;
    let bytes = encode_sketch(&sketch, &model)?;
    let decoded = decode_sketch(&bytes, &model)?;
    let pixels = (sketch.width() * sketch.height()) as f64;
    println!(
        "model λ={} | {} bytes, {:.5} bpp (estimate {:.0} bits) | MS-SSIM {:.4}",
        model.meta.lambda,
        bytes.len(),
        (bytes.len() * 8) as f64 / pixels,
        estimate_payload_bits(&sketch, &model),
        ms_ssim(&sketch, &decoded)?
    );
    sketch.save(out.join("sketch.png"))?;
    decoded.save(out.join("decoded.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
