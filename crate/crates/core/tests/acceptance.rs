//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! cargo test --test acceptance -- --nocapture

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textsketch::core::container::{CRC_LEN, HEADER_LEN};
use textsketch::core::{
    compute_bpp, cosine_similarity, Container, Image, Mode, TokenCoding, TokenSequence,
};
use textsketch::decoder::{edge_correlation, MockBackend};
use textsketch::evaluation::{
    d_clip, d_clip_embeddings, fid, kid, rows_to_csv, run_benchmark, BenchmarkSettings,
    RandomProjectionFeatures, CSV_COLUMNS,
};
use textsketch::inversion::{invert_prompt, Embedder, PiConfig, ToyEmbedder};
use textsketch::pipeline::{Decoder, Encoder};
use textsketch::sketch::{
    encode_sketch, estimate_payload_bits, split_dataset, train_ntc, GradientEdgeDetector, NtcModel,
    NtcTrainConfig,
};
use textsketch::synthetic::{synthetic_scenes, synthetic_sketches};
use textsketch::token_codec::{
    decode_tokens, decode_tokens_fixed, encode_text_lossless, encode_tokens_fixed, WordPieceVocab,
};

type Outcome = Result<String, String>;

/// Writes straight to stderr so the lines survive output capture.
fn report(name: &str, outcome: &Outcome, elapsed: Duration) {
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] {tag} {name} ({:.1?}): {detail}", elapsed);
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pic_rate_bound() -> Outcome {
    const CLIP_VOCAB: u32 = 49408;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ids: Vec<u32> = (0..16).map(|_| rng.gen_range(0..CLIP_VOCAB)).collect();
    let tokens = TokenSequence::new(ids, CLIP_VOCAB).map_err(|e| e.to_string())?;
    let (payload, bits) = encode_tokens_fixed(&tokens).map_err(|e| e.to_string())?;
    let bytes = Container::new(Mode::Pic, 768, 512, TokenCoding::FixedWidth, payload, None)
        .and_then(|c| c.to_bytes())
        .map_err(|e| e.to_string())?;
    let total = bytes.len() as u64 * 8;
    let bpp = compute_bpp(total, 768, 512).map_err(|e| e.to_string())?;
    let exact = total as f64 / (768.0 * 512.0);
    let expected = ((HEADER_LEN + 32 + CRC_LEN) * 8) as u64;
    check(
        bits == 256
            && total == expected
            && bpp == exact
            && bpp <= 0.003
            && start.elapsed() < Duration::from_secs(1),
        format!("{bits} token bits, {total} container bits, {bpp:.5} bpp <= 0.003"),
    )
}

fn exhaustive_optimum(e: &ToyEmbedder, len: usize) -> f64 {
    let (v, d) = (e.vocab_size(), e.embed_dim());
    let mut best = f64::NEG_INFINITY;
    for code in 0..v.pow(len as u32) {
        let mut mean = vec![0.0f32; d];
        let mut c = code;
        for _ in 0..len {
            for (m, r) in mean.iter_mut().zip(e.codebook_row(c % v)) {
                *m += r / len as f32;
            }
            c /= v;
        }
        best = best.max(cosine_similarity(e.image_feature(), &mean).unwrap());
    }
    best
}

fn inversion_oracle() -> Outcome {
    let start = Instant::now();
    let gray = Image::from_fn(8, 8, |_, _| [0.5; 3]).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for i in 0..100u64 {
        let vocab = 2 + (i as usize % 7);
        let len = 1 + (i as usize / 7) % 2;
        let e = ToyEmbedder::random(vocab, 4, 9000 + i);
        let cfg = PiConfig {
            prompt_length: len,
            step_count: 200,
            restart_count: 8,
            seed: i,
            ..PiConfig::default()
        };
        let inv = invert_prompt(&gray, &e, &cfg).map_err(|e| e.to_string())?;
        if (inv.objective - exhaustive_optimum(&e, len)).abs() < 1e-6 {
            hits += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        hits >= 95 && elapsed < Duration::from_secs(300),
        format!("{hits}/100 instances at the exhaustive optimum (V <= 8, L <= 2)"),
    )
}

fn lossless() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();
    let mut fallbacks = 0;
    for case in 0..1000 {
        let vocab = rng.gen_range(1u32..60000);
        let len = rng.gen_range(1usize..40);
        let ids: Vec<u32> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
        let tokens = TokenSequence::new(ids, vocab).unwrap();
        let (bytes, _) = encode_tokens_fixed(&tokens).unwrap();
        if decode_tokens_fixed(&bytes, len, vocab).ok().as_ref() != Some(&tokens) {
            failures.push(format!("fixed case {case}"));
        }
        let vocab_table = WordPieceVocab::synthetic(vocab as usize);
        let p = encode_text_lossless(&tokens, &vocab_table).unwrap();
        fallbacks += p.fell_back as usize;
        if decode_tokens(p.coding, &p.bytes, len, &vocab_table)
            .ok()
            .as_ref()
            != Some(&tokens)
        {
            failures.push(format!("text case {case}"));
        }
    }
    for case in 0..1000 {
        let mode = if rng.gen_bool(0.5) {
            Mode::Pic
        } else {
            Mode::Pics
        };
        let coding = if rng.gen_bool(0.5) {
            TokenCoding::FixedWidth
        } else {
            TokenCoding::Text
        };
        let tok: Vec<u8> = (0..rng.gen_range(0..80)).map(|_| rng.gen()).collect();
        let sketch = (mode == Mode::Pics).then(|| {
            (0..rng.gen_range(0..400))
                .map(|_| rng.gen())
                .collect::<Vec<u8>>()
        });
        let c = Container::new(
            mode,
            rng.gen_range(1..=4096),
            rng.gen_range(1..=4096),
            coding,
            tok,
            sketch,
        )
        .unwrap();
        let bytes = c.to_bytes().unwrap();
        if Container::from_bytes(&bytes).ok().as_ref() != Some(&c) {
            failures.push(format!("container case {case}"));
        }
    }
    let reference = Container::new(
        Mode::Pics,
        512,
        768,
        TokenCoding::FixedWidth,
        vec![0xa5; 32],
        Some(vec![0x3c; 64]),
    )
    .unwrap()
    .to_bytes()
    .unwrap();
    let mut undetected = 0;
    for bit in 0..reference.len() * 8 {
        let mut b = reference.clone();
        b[bit / 8] ^= 1 << (bit % 8);
        if Container::from_bytes(&b).is_ok() {
            undetected += 1;
        }
    }
    check(
        failures.is_empty() && undetected == 0,
        format!(
            "2000 token + 1000 container round trips, {} failures ({fallbacks} text fallbacks); {} of {} bit flips undetected",
            failures.len(),
            undetected,
            reference.len() * 8
        ),
    )
}

/// Trains the full λ grid at 128×128; returns the outcome text and the
/// highest-λ model for the end-to-end check.
fn sketch_codec_target() -> (Outcome, Option<NtcModel>) {
    let start = Instant::now();
    let run = || -> Result<(String, bool, NtcModel), String> {
        let sketches = synthetic_sketches(500, 128, 128, 50_000).map_err(|e| e.to_string())?;
        let cfg = NtcTrainConfig {
            epochs: 4,
            ..NtcTrainConfig::default()
        };
        let outcome = train_ntc(&sketches, &cfg).map_err(|e| e.to_string())?;
        let (_, val) = split_dataset(&sketches, cfg.validation_fraction, cfg.seed)
            .map_err(|e| e.to_string())?;
        let in_band: Vec<String> = outcome
            .sweep
            .iter()
            .filter(|p| (0.005..=0.02).contains(&p.validation_bpp))
            .map(|p| format!("λ={} {:.4} bpp", p.lambda, p.validation_bpp))
            .collect();
        let mut worst_gap = 0.0f64;
        let mut violations = 0;
        for model in &outcome.models {
            for s in &val {
                let coded = (encode_sketch(s, model).map_err(|e| e.to_string())?.len() * 8) as f64;
                let est = estimate_payload_bits(s, model);
                let gap = (coded - est).abs();
                worst_gap = worst_gap.max(gap - 0.01 * est);
                if gap > 64.0 + 0.01 * est {
                    violations += 1;
                }
            }
        }
        let rates: Vec<String> = outcome
            .sweep
            .iter()
            .map(|p| format!("{:.4}", p.validation_bpp))
            .collect();
        let detail = format!(
            "{} validation sketches; sweep bpp [{}]; in [0.005, 0.02]: {}; coded-vs-estimate violations {violations} (worst excess {worst_gap:.1} bits over 1%)",
            val.len(),
            rates.join(", "),
            if in_band.is_empty() { "none".into() } else { in_band.join(", ") },
        );
        let last = outcome.models.last().cloned().ok_or("empty grid")?;
        Ok((detail, !in_band.is_empty() && violations == 0, last))
    };
    match run() {
        Ok((detail, pass, model)) => {
            let within_budget = start.elapsed() < Duration::from_secs(8 * 3600);
            (check(pass && within_budget, detail), Some(model))
        }
        Err(e) => (Err(e), None),
    }
}

fn kid_oracle(a: &[f64], b: &[f64]) -> f64 {
    let k = |x: f64, y: f64| (x * y + 1.0).powi(3);
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in 0..a.len() {
            if i != j {
                saa += k(a[i], a[j]);
                sbb += k(b[i], b[j]);
                sab += k(a[i], b[j]);
            }
        }
    }
    let p = (a.len() * (a.len() - 1)) as f64;
    saa / p + sbb / p - 2.0 * sab / p
}

fn metric_correctness() -> Outcome {
    let pts = |v: &[f32]| v.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    let e = |r: textsketch::Result<f64>| r.map_err(|e| e.to_string());
    let parts = common::stand_ins();
    let img = synthetic_scenes(1, 32, 32, 3)
        .map_err(|e| e.to_string())?
        .remove(0);
    let same = e(d_clip(&img, &img, &parts.embedder))?;
    let ortho = e(d_clip_embeddings(&[1.0, 0.0], &[0.0, 1.0]))?;
    let anti = e(d_clip_embeddings(&[1.0, 0.0], &[-1.0, 0.0]))?;
    let f1 = e(fid(&pts(&[0.0, 2.0]), &pts(&[1.0, 3.0])))?;
    let k1 = e(kid(&pts(&[2.0, 0.0]), &pts(&[1.0, 1.0])))?;
    let k_oracle = kid_oracle(&[2.0, 0.0], &[1.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let set: Vec<Vec<f32>> = (0..30)
        .map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let f0 = e(fid(&set, &set))?;
    let k0 = e(kid(&set, &set))?;
    let detail = format!(
        "d_clip {same}/{ortho}/{anti}; fid 1-D {f1:.12}; kid {k1:.12} (oracle {k_oracle}); identical fid {f0:e} kid {k0:e}"
    );
    check(
        same == 0.0
            && ortho == 1.0
            && anti == 2.0
            && (f1 - 1.0).abs() <= 1e-9
            && (k1 + 19.0).abs() <= 1e-9
            && (k_oracle + 19.0).abs() <= 1e-9
            && f0.abs() <= 1e-9
            && k0.abs() <= 1e-9,
        detail,
    )
}

struct E2eRun {
    bytes: Vec<(Vec<u8>, Vec<u8>)>,
    images: Vec<(Image, Image)>,
    worst_corr: f64,
    rate_ok: bool,
    bpp: (f64, f64),
}

fn e2e_once(model: &NtcModel, scenes: &[Image]) -> textsketch::Result<E2eRun> {
    let parts = common::stand_ins();
    let encoder = Encoder {
        embedder: &parts.embedder,
        tokenizer: &parts.tokenizer,
        detector: &GradientEdgeDetector,
        sketch_model: Some(model),
        pi: PiConfig::default(),
        token_coding: TokenCoding::FixedWidth,
    };
    let backend = MockBackend::default();
    let decoder = Decoder {
        tokenizer: &parts.tokenizer,
        prompt_length: encoder.pi.prompt_length,
        sketch_model: Some(model),
        backend: &backend,
    };
    let mut run = E2eRun {
        bytes: Vec::new(),
        images: Vec::new(),
        worst_corr: f64::INFINITY,
        rate_ok: true,
        bpp: (0.0, 0.0),
    };
    for (i, img) in scenes.iter().enumerate() {
        let id = format!("e2e{i}");
        let prompt = encoder.invert(img)?;
        let pic = encoder.compress_with_prompt(img, &id, Mode::Pic, &prompt)?;
        let pics = encoder.compress_with_prompt(img, &id, Mode::Pics, &prompt)?;
        let d_pic = decoder.decompress(&pic.bytes, &id, i as u64)?;
        let d_pics = decoder.decompress(&pics.bytes, &id, i as u64)?;
        let sketch = d_pics.sketch.as_ref().expect("PICS decode yields a sketch");
        run.worst_corr = run.worst_corr.min(edge_correlation(&d_pics.image, sketch)?);
        run.rate_ok &= pic.report.bpp < pics.report.bpp;
        run.bpp.0 += pic.report.bpp / scenes.len() as f64;
        run.bpp.1 += pics.report.bpp / scenes.len() as f64;
        run.bytes.push((pic.bytes, pics.bytes));
        run.images.push((d_pic.image, d_pics.image));
    }
    Ok(run)
}

fn end_to_end(model: Option<&NtcModel>) -> Outcome {
    let model = model.ok_or("no sketch model (sketch criterion did not train)")?;
    let scenes = synthetic_scenes(10, 128, 128, 424_242).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let first = e2e_once(model, &scenes).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let second = e2e_once(model, &scenes).map_err(|e| e.to_string())?;
    let deterministic = first.bytes == second.bytes && first.images == second.images;
    check(
        deterministic && first.worst_corr > 0.5 && first.rate_ok && elapsed < Duration::from_secs(120),
        format!(
            "10 images at 128x128, sketch model λ={} ({:.4} bpp); deterministic {deterministic}; worst edge correlation {:.3}; mean bpp PIC {:.5} < PICS {:.5} on every image: {}; one run {:.1?}",
            model.meta.lambda,
            model.meta.validation_bpp,
            first.worst_corr,
            first.bpp.0,
            first.bpp.1,
            first.rate_ok,
            elapsed
        ),
    )
}

fn golden_benchmark() -> Outcome {
    let model = common::sketch_model_64();
    let enc = common::encoder(Some(model), common::quick_pi());
    let backend = MockBackend::default();
    let dec = common::decoder(Some(model), &backend, enc.pi.prompt_length);
    let data: Vec<(String, Image)> = synthetic_scenes(4, 64, 64, 0)
        .map_err(|e| e.to_string())?
        .into_iter()
        .enumerate()
        .map(|(i, img)| (format!("img{i:02}"), img))
        .collect();
    let out = run_benchmark(
        &data,
        &enc,
        &dec,
        &RandomProjectionFeatures::default(),
        &BenchmarkSettings::default(),
    )
    .map_err(|e| e.to_string())?;
    let csv = String::from_utf8(rows_to_csv(&out.rows).map_err(|e| e.to_string())?).unwrap();
    let golden = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/benchmark.csv"
    ))
    .map_err(|e| e.to_string())?;
    let header_ok = csv.lines().next() == Some(CSV_COLUMNS.join(",").as_str());
    check(
        header_ok && csv == golden,
        format!(
            "{} rows, header {}; byte-identical to golden: {}",
            out.rows.len(),
            if header_ok { "stable" } else { "changed" },
            csv == golden
        ),
    )
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        report(name, &outcome, start.elapsed());
        results.push((name.to_string(), outcome.is_ok()));
    };
    run("pic-rate-bound", &mut pic_rate_bound);
    run("prompt-inversion-oracle", &mut inversion_oracle);
    run("lossless-guarantees", &mut lossless);
    let mut e2e_model = None;
    run("sketch-codec-target", &mut || {
        let (outcome, model) = sketch_codec_target();
        e2e_model = model;
        outcome
    });
    run("metric-correctness", &mut metric_correctness);
    run("end-to-end-mock", &mut || end_to_end(e2e_model.as_ref()));
    run("benchmark-golden", &mut golden_benchmark);
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
