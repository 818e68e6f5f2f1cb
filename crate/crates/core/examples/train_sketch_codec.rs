//! Trains the sketch codec on synthetic edge maps and prints the λ sweep.
//!
//! cargo run --example train_sketch_codec -- [count] [side] [epochs] [out.ntc]

use textsketch::sketch::{train_ntc, NtcTrainConfig};
use textsketch::synthetic::synthetic_sketches;

fn main() -> textsketch::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count = args.first().and_then(|a| a.parse().ok()).unwrap_or(120);
    let side = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(128);
    let epochs = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(4);
    let sketches = synthetic_sketches(count, side, side, 1000)?;
    let cfg = NtcTrainConfig {
        epochs,
        ..NtcTrainConfig::default()
    };
    let start = std::time::Instant::now();
    let outcome = train_ntc(&sketches, &cfg)?;
    println!("lambda      val_bpp     val_ms_ssim  train_loss");
    for p in &outcome.sweep {
        println!(
            "{:<10}  {:<10.5}  {:<11.4}  {:.5}",
            p.lambda, p.validation_bpp, p.validation_ms_ssim, p.final_train_loss
        );
    }
    println!(
        "selected lambda {} ({:.5} bpp) in {:.1?}",
        outcome.model.meta.lambda,
        outcome.model.meta.validation_bpp,
        start.elapsed()
    );
    if let Some(path) = args.get(3) {
        outcome.model.save(path)?;
        println!("saved {path}");
    }
    Ok(())
}
