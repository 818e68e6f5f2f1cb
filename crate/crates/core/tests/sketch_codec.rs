use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textsketch::core::SketchMap;
use textsketch::sketch::{
    decode_sketch, encode_sketch, estimate_payload_bits, evaluate_codec, ms_ssim, train_at_lambda,
    train_ntc, NtcModel, NtcTrainConfig,
};
use textsketch::synthetic::synthetic_sketches;
use textsketch::Error;

fn small_config() -> NtcTrainConfig {
    NtcTrainConfig {
        epochs: 2,
        lambdas: vec![1.0],
        ..NtcTrainConfig::default()
    }
}

/// One moderately trained model shared by the coding tests.
fn trained() -> &'static NtcModel {
    static MODEL: OnceLock<NtcModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let data = synthetic_sketches(80, 64, 64, 500).unwrap();
        train_ntc(&data, &small_config()).unwrap().model
    })
}

fn noise_sketch(w: usize, h: usize, seed: u64) -> SketchMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SketchMap::new(w, h, (0..w * h).map(|_| rng.gen::<f32>()).collect()).unwrap()
}

#[test]
fn lambda_sweep_is_monotone_in_rate() {
    let data = synthetic_sketches(500, 64, 64, 1000).unwrap();
    let cfg = NtcTrainConfig {
        epochs: 2,
        ..NtcTrainConfig::default()
    };
    assert_eq!(cfg.lambdas.len(), 9);
    let out = train_ntc(&data, &cfg).unwrap();
    let inversions = out
        .sweep
        .windows(2)
        .filter(|p| p[1].validation_bpp < p[0].validation_bpp)
        .count();
    assert!(inversions <= 2, "{:#?}", out.sweep);
    let (first, last) = (&out.sweep[0], out.sweep.last().unwrap());
    assert!(last.validation_bpp > first.validation_bpp);
    assert!(last.validation_ms_ssim > first.validation_ms_ssim);
    // the selected model is the one nearest the target rate
    let best = out
        .sweep
        .iter()
        .map(|p| (p.validation_bpp - cfg.target_bpp).abs())
        .fold(f64::INFINITY, f64::min);
    assert_eq!((out.model.meta.validation_bpp - cfg.target_bpp).abs(), best);
}

#[test]
fn single_image_is_overfit() {
    let data = synthetic_sketches(1, 64, 64, 5).unwrap();
    let cfg = NtcTrainConfig {
        epochs: 1500,
        batch_size: 1,
        learning_rate: 3e-3,
        ..NtcTrainConfig::default()
    };
    let (model, _) = train_at_lambda(&data, &cfg, 16.0, 0).unwrap();
    let (_, quality) = evaluate_codec(&model, &data).unwrap();
    assert!(quality > 0.99, "{quality}");
}

#[test]
fn training_is_deterministic_given_seed() {
    let data = synthetic_sketches(20, 32, 32, 3).unwrap();
    let cfg = NtcTrainConfig {
        epochs: 1,
        lambdas: vec![0.5, 2.0],
        ..NtcTrainConfig::default()
    };
    let a = train_ntc(&data, &cfg).unwrap();
    let b = train_ntc(&data, &cfg).unwrap();
    assert_eq!(a.model.tables(), b.model.tables());
    assert_eq!(a.model.to_bytes(), b.model.to_bytes());
    assert_eq!(a.sweep, b.sweep);
}

#[test]
fn training_errors() {
    let cfg = small_config();
    assert!(matches!(train_ntc(&[], &cfg), Err(Error::Data(_))));
    let data = synthetic_sketches(4, 32, 32, 0).unwrap();
    let bad = NtcTrainConfig {
        lambdas: vec![],
        ..cfg.clone()
    };
    assert!(matches!(train_ntc(&data, &bad), Err(Error::Config(_))));
    assert!(matches!(
        train_at_lambda(&data, &cfg, 1e40, 0),
        Err(Error::Numerical { .. })
    ));
}

#[test]
fn coded_length_tracks_the_entropy_estimate() {
    let model = trained();
    let mut sketches = synthetic_sketches(90, 64, 64, 90_000).unwrap();
    sketches.extend(synthetic_sketches(5, 100, 72, 7).unwrap());
    sketches.extend((0..5).map(|i| noise_sketch(48, 40, i)));
    assert_eq!(sketches.len(), 100);
    for s in &sketches {
        let bits = (encode_sketch(s, model).unwrap().len() * 8) as f64;
        let est = estimate_payload_bits(s, model);
        assert!(
            (bits - est).abs() <= 64.0 + 0.01 * est,
            "coded {bits} vs estimate {est}"
        );
    }
}

#[test]
fn empty_sketch_costs_no_more_than_noise() {
    let model = trained();
    let zero = SketchMap::zeros(64, 64).unwrap();
    let noise = noise_sketch(64, 64, 1);
    let z = encode_sketch(&zero, model).unwrap().len();
    let n = encode_sketch(&noise, model).unwrap().len();
    assert!(z <= n, "{z} > {n}");
}

#[test]
fn roundtrip_is_deterministic_and_meets_recorded_quality() {
    let model = trained();
    let held_out = synthetic_sketches(40, 64, 64, 77_000).unwrap();
    let mut total = 0.0;
    for s in &held_out {
        let a = encode_sketch(s, model).unwrap();
        assert_eq!(a, encode_sketch(s, model).unwrap());
        let r = decode_sketch(&a, model).unwrap();
        assert_eq!(r, decode_sketch(&a, model).unwrap());
        assert!(r.data().iter().all(|v| (0.0..=1.0).contains(v)));
        total += ms_ssim(s, &r).unwrap();
    }
    let mean = total / held_out.len() as f64;
    assert!(mean >= model.meta.validation_ms_ssim - 0.05, "{mean}");
}

#[test]
fn saved_model_decodes_identically() {
    let model = trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codec.ntc");
    model.save(&path).unwrap();
    let loaded = NtcModel::load(&path).unwrap();
    let s = &synthetic_sketches(1, 64, 64, 4242).unwrap()[0];
    let bytes = encode_sketch(s, &loaded).unwrap();
    assert_eq!(bytes, encode_sketch(s, model).unwrap());
    assert_eq!(
        decode_sketch(&bytes, &loaded).unwrap(),
        decode_sketch(&bytes, model).unwrap()
    );
}

#[test]
fn corrupt_streams_fail_or_decode_without_panicking() {
    let model = trained();
    assert!(matches!(decode_sketch(&[], model), Err(Error::Decode(_))));
    let s = &synthetic_sketches(1, 64, 64, 1).unwrap()[0];
    let bytes = encode_sketch(s, model).unwrap();
    for i in 0..bytes.len() {
        let mut b = bytes.clone();
        b[i] ^= 0xA5;
        let _ = decode_sketch(&b, model);
    }
}
