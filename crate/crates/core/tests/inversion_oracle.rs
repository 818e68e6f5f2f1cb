//! Prompt inversion against exhaustive search on small toy embedders.

use textsketch::core::{cosine_similarity, Image};
use textsketch::inversion::{invert_prompt, Embedder, PiConfig, ToyEmbedder};

/// Best objective over all `V^L` prompts, by enumeration.
fn exhaustive_optimum(e: &ToyEmbedder, len: usize) -> f64 {
    let v = e.vocab_size();
    let d = e.embed_dim();
    let mut best = f64::NEG_INFINITY;
    for code in 0..v.pow(len as u32) {
        let mut mean = vec![0.0f32; d];
        let mut c = code;
        for _ in 0..len {
            let row = e.codebook_row(c % v);
            c /= v;
            for (m, r) in mean.iter_mut().zip(row) {
                *m += r / len as f32;
            }
        }
        best = best.max(cosine_similarity(e.image_feature(), &mean).unwrap());
    }
    best
}

fn gray() -> Image {
    Image::from_fn(8, 8, |_, _| [0.5; 3]).unwrap()
}

#[test]
fn matches_enumeration_on_v8_l2() {
    let e = ToyEmbedder::random(8, 4, 2024);
    let cfg = PiConfig {
        prompt_length: 2,
        step_count: 200,
        restart_count: 8,
        seed: 1,
        ..PiConfig::default()
    };
    let inv = invert_prompt(&gray(), &e, &cfg).unwrap();
    assert!((inv.objective - exhaustive_optimum(&e, 2)).abs() < 1e-6);
    assert_eq!(inv.tokens.len(), 2);
}

#[test]
fn random_instances_reach_the_optimum() {
    let mut hits = 0;
    for i in 0..100u64 {
        let vocab = 2 + (i as usize % 7);
        let len = 1 + (i as usize / 7) % 2;
        let e = ToyEmbedder::random(vocab, 4, 1000 + i);
        let cfg = PiConfig {
            prompt_length: len,
            step_count: 200,
            restart_count: 8,
            seed: i,
            ..PiConfig::default()
        };
        let inv = invert_prompt(&gray(), &e, &cfg).unwrap();
        assert!(inv.tokens.ids().iter().all(|&id| (id as usize) < vocab));
        if (inv.objective - exhaustive_optimum(&e, len)).abs() < 1e-6 {
            hits += 1;
        }
    }
    println!("prompt inversion hit the optimum on {hits}/100 instances");
    assert!(hits >= 95, "{hits}/100");
}
