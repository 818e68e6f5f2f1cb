//! Per-image and dataset metrics on synthetic scenes and a degraded copy.
//!
//! cargo run --example metrics

use textsketch::core::Image;
use textsketch::evaluation::{d_clip, fid, kid, psnr, FeatureExtractor, RandomProjectionFeatures};
use textsketch::pipeline::{StandInSettings, StandIns};
use textsketch::sketch::ms_ssim_image;
use textsketch::synthetic::synthetic_scenes;

fn darken(img: &Image, amount: f32) -> textsketch::Result<Image> {
    Image::from_fn(img.width(), img.height(), |x, y| {
        img.pixel(x, y).map(|v| v * (1.0 - amount))
    })
}

fn main() -> textsketch::Result<()> {
    let parts = StandIns::new(&StandInSettings::default())?;
    let features = RandomProjectionFeatures::default();
    let scenes = synthetic_scenes(40, 64, 64, 0)?;
    let others = synthetic_scenes(40, 64, 64, 1000)?;
    let darker: Vec<Image> = scenes
        .iter()
        .map(|s| darken(s, 0.3))
        .collect::<textsketch::Result<_>>()?;

    let a = &scenes[0];
    println!(
        "{:<10} {:>8} {:>8} {:>8}",
        "pair", "d_clip", "ms_ssim", "psnr"
    );
    for (name, b) in [
        ("identical", a),
        ("darker", &darker[0]),
        ("other", &others[0]),
    ] {
        println!(
            "{name:<10} {:>8.4} {:>8.4} {:>8.2}",
            d_clip(a, b, &parts.embedder)?,
            ms_ssim_image(a, b)?,
            psnr(a, b)?
        );
    }

    let feats = |set: &[Image]| {
        set.iter()
            .map(|i| features.extract(i))
            .collect::<textsketch::Result<Vec<_>>>()
    };
    let (fa, fo, fd) = (feats(&scenes)?, feats(&others)?, feats(&darker)?);
    println!("{:<24} {:>10} {:>10}", "sets (n=40)", "fid", "kid");
    for (name, b) in [("same", &fa), ("same distribution", &fo), ("darkened", &fd)] {
        println!("{name:<24} {:>10.5} {:>10.5}", fid(&fa, b)?, kid(&fa, b)?);
    }
    Ok(())
}
