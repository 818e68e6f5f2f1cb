use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use textsketch::cli::{EXIT_BACKEND, EXIT_CONFIG, EXIT_CORRUPT, EXIT_DATA, EXIT_IO};
use textsketch::core::container::{CRC_LEN, HEADER_LEN, LENGTH_PREFIX_LEN};
use textsketch::core::{compute_bpp, Container, Mode};
use textsketch::synthetic::synthetic_scenes;

fn txsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_txsk"))
        .args(args)
        .env_remove("TXSK_BACKEND_ENDPOINT")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_images(dir: &Path, count: usize, side: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, img) in synthetic_scenes(count, side, side, seed)
        .unwrap()
        .iter()
        .enumerate()
    {
        img.save(dir.join(format!("s{i:02}.png"))).unwrap();
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
    model: PathBuf,
}

/// Three test images, a fast config, and a CLI-trained sketch model.
fn workspace() -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    write_images(&root.join("images"), 3, 64, 0);
    write_images(&root.join("train"), 24, 64, 500);
    let config = root.join("run.toml");
    std::fs::write(
        &config,
        "[pi]\nstep_count = 150\nrestart_count = 2\n\n[sketch_training]\nepochs = 1\n",
    )
    .unwrap();
    let model = root.join("model.ntc");
    let out = txsk(&[
        "train-sketch-codec",
        s(&root.join("train")),
        "--extract",
        "--lambda-grid",
        "4",
        "--config",
        s(&config),
        "--out",
        s(&model),
    ]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("one value"));
    Workspace {
        _tmp: tmp,
        root,
        config,
        model,
    }
}

#[test]
fn compress_decompress_roundtrip() {
    let ws = workspace();
    let img = ws.root.join("images/s00.png");
    let tsk = ws.root.join("single.tsk");
    let out = ok(&txsk(&[
        "compress",
        s(&img),
        "--config",
        s(&ws.config),
        "--out",
        s(&tsk),
    ]));
    assert!(out.contains("PIC"));

    // rate printed by the encoder matches the file on disk
    let bytes = std::fs::read(&tsk).unwrap();
    let c = Container::from_bytes(&bytes).unwrap();
    assert_eq!(c.mode, Mode::Pic);
    assert!(c.sketch_payload.is_none());
    let bpp = compute_bpp(bytes.len() as u64 * 8, 64, 64).unwrap();
    assert!(out.contains(&format!("{bpp:.6} bpp")), "{out}");

    // decompression with the mock backend is deterministic
    let a = ws.root.join("a.png");
    let b = ws.root.join("b.png");
    let shown = ok(&txsk(&[
        "decompress",
        s(&tsk),
        "--out",
        s(&a),
        "--seed",
        "3",
    ]));
    assert!(shown.contains("prompt"));
    ok(&txsk(&[
        "decompress",
        s(&tsk),
        "--out",
        s(&b),
        "--seed",
        "3",
    ]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let image = textsketch::core::Image::load(&a).unwrap();
    assert_eq!((image.width(), image.height()), (64, 64));
}

#[test]
fn pics_batch_writes_containers_and_summary() {
    let ws = workspace();
    let out_dir = ws.root.join("packed");
    let images = ws.root.join("images");
    let args = [
        "compress",
        s(&images),
        "--mode",
        "pics",
        "--sketch-model",
        s(&ws.model),
        "--config",
        s(&ws.config),
        "--out",
        s(&out_dir),
    ];
    ok(&txsk(&args));
    for i in 0..3 {
        let bytes = std::fs::read(out_dir.join(format!("s{i:02}.tsk"))).unwrap();
        let c = Container::from_bytes(&bytes).unwrap();
        let sketch = c.sketch_payload.as_ref().unwrap().len();
        assert_eq!(
            bytes.len(),
            HEADER_LEN + c.token_payload.len() + LENGTH_PREFIX_LEN + sketch + CRC_LEN
        );
    }
    let summary = std::fs::read_to_string(out_dir.join("compress_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("image_id,mode,width,height,total_bits,bpp"));

    // idempotent over unchanged inputs
    let first = std::fs::read(out_dir.join("s01.tsk")).unwrap();
    ok(&txsk(&args));
    assert_eq!(first, std::fs::read(out_dir.join("s01.tsk")).unwrap());

    // a sketch container needs a sketch-capable backend
    let res = txsk(&[
        "decompress",
        s(&out_dir.join("s00.tsk")),
        "--sketch-model",
        s(&ws.model),
        "--backend",
        "text",
        "--endpoint",
        "http://127.0.0.1:9/generate",
        "--out",
        s(&ws.root.join("x.png")),
    ]);
    assert_eq!(
        code(&res),
        EXIT_BACKEND,
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stderr).contains("capability"));

    // and the sketch model
    let res = txsk(&["decompress", s(&out_dir.join("s00.tsk"))]);
    assert_eq!(code(&res), EXIT_CONFIG);

    let res = txsk(&[
        "decompress",
        s(&out_dir.join("s00.tsk")),
        "--sketch-model",
        s(&ws.model),
        "--out",
        s(&ws.root.join("y.png")),
    ]);
    ok(&res);
}

#[test]
fn error_exit_codes() {
    let ws = workspace();
    let img = ws.root.join("images/s00.png");

    let res = txsk(&["compress", s(&img), "--mode", "pics"]);
    assert_eq!(code(&res), EXIT_CONFIG);

    let res = txsk(&["compress", s(&ws.root.join("missing.png"))]);
    assert_eq!(code(&res), EXIT_IO);

    let tsk = ws.root.join("t.tsk");
    ok(&txsk(&[
        "compress",
        s(&img),
        "--config",
        s(&ws.config),
        "--out",
        s(&tsk),
    ]));
    let bytes = std::fs::read(&tsk).unwrap();
    let cut = ws.root.join("cut.tsk");
    std::fs::write(&cut, &bytes[..bytes.len() - 3]).unwrap();
    let res = txsk(&["decompress", s(&cut), "--out", s(&ws.root.join("cut.png"))]);
    assert_eq!(code(&res), EXIT_CORRUPT);
    let mut flipped = bytes.clone();
    flipped[HEADER_LEN] ^= 0x10;
    let bad = ws.root.join("bad.tsk");
    std::fs::write(&bad, flipped).unwrap();
    let res = txsk(&["decompress", s(&bad), "--out", s(&ws.root.join("bad.png"))]);
    assert_eq!(code(&res), EXIT_CORRUPT);
    assert!(String::from_utf8_lossy(&res.stderr).contains("checksum"));

    let empty = ws.root.join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let res = txsk(&["train-sketch-codec", s(&empty)]);
    assert_eq!(code(&res), EXIT_DATA);

    let res = txsk(&["compress", s(&img), "--backend", "nonsense"]);
    assert_eq!(code(&res), EXIT_CONFIG);
}

#[test]
fn training_is_reproducible() {
    let ws = workspace();
    let again = ws.root.join("again.ntc");
    ok(&txsk(&[
        "train-sketch-codec",
        s(&ws.root.join("train")),
        "--extract",
        "--lambda-grid",
        "4",
        "--config",
        s(&ws.config),
        "--out",
        s(&again),
    ]));
    assert_eq!(
        std::fs::read(&ws.model).unwrap(),
        std::fs::read(&again).unwrap()
    );
    let sweep = std::fs::read_to_string(ws.root.join("model.sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2);
    assert!(sweep.starts_with("lambda,validation_bpp"));
}

#[test]
fn eval_modes() {
    let ws = workspace();
    let images = ws.root.join("images");

    let same = ws.root.join("eval_same");
    ok(&txsk(&[
        "eval",
        s(&images),
        "--reconstructions",
        s(&images),
        "--out",
        s(&same),
    ]));
    let csv = std::fs::read_to_string(same.join("benchmark.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(4).unwrap(), "0.000000", "{line}");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(same.join("summary.json")).unwrap()).unwrap();
    assert!(summary["modes"][0]["fid"].as_f64().unwrap().abs() < 1e-9);

    let partial = ws.root.join("partial");
    write_images(&partial, 2, 64, 0);
    let res = txsk(&[
        "eval",
        s(&images),
        "--reconstructions",
        s(&partial),
        "--out",
        s(&ws.root.join("e")),
    ]);
    assert_eq!(code(&res), EXIT_DATA);
    assert!(String::from_utf8_lossy(&res.stderr).contains("s02"));

    let e2e = ws.root.join("eval_e2e");
    let args = [
        "eval",
        s(&images),
        "--end-to-end",
        "--sketch-model",
        s(&ws.model),
        "--config",
        s(&ws.config),
        "--out",
        s(&e2e),
    ];
    ok(&txsk(&args));
    let first = std::fs::read(e2e.join("benchmark.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 1 + 3 * 2);
    ok(&txsk(&args));
    assert_eq!(first, std::fs::read(e2e.join("benchmark.csv")).unwrap());
    assert!(e2e.join("rate_d_clip.svg").exists());
}
