//! Recovers a hard prompt for an image by projected gradient search.
//!
//! cargo run --example invert_prompt -- [image.png] [prompt_length]
//!
//! Without an image a synthetic scene is used.

use textsketch::core::{cosine_similarity, Image};
use textsketch::inversion::{invert_prompt, Embedder, PiConfig};
use textsketch::pipeline::{StandInSettings, StandIns};
use textsketch::synthetic::synthetic_scene;
use textsketch::token_codec::Tokenizer;

fn main() -> textsketch::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let image = match args.first() {
        Some(path) => Image::load(path)?,
        None => synthetic_scene(128, 128, 3)?,
    };
    let prompt_length = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(16);

    let parts = StandIns::new(&StandInSettings::default())?;
    let cfg = PiConfig {
        prompt_length,
        ..PiConfig::default()
    };
    let start = std::time::Instant::now();
    let inv = invert_prompt(&image, &parts.embedder, &cfg)?;
    println!("ids       {:?}", inv.tokens.ids());
    println!("prompt    {:?}", parts.tokenizer.render(inv.tokens.ids())?);
    println!(
        "objective {:.4} after {:.1?}",
        inv.objective,
        start.elapsed()
    );

    // a random prompt of the same length for scale
    let random: Vec<f32> = (0..prompt_length)
        .flat_map(|i| {
            parts
                .embedder
                .codebook_row(i * 37 % parts.embedder.vocab_size())
                .to_vec()
        })
        .collect();
    let baseline = cosine_similarity(
        &parts.embedder.encode_image(&image)?,
        &parts.embedder.encode_text(&random)?,
    )?;
    println!("arbitrary prompt scores {baseline:.4}");
    Ok(())
}
