//! Reconstructs an image from a prompt and a sketch with whichever backend
//! is configured: HTTP when TXSK_BACKEND_ENDPOINT is set, else the mock.
//!
//! TXSK_BACKEND_ENDPOINT=http://host:port/generate cargo run --example backends -- [text] [out.png]

use std::time::Duration;

use textsketch::decoder::{
    edge_correlation, reconstruct_pic, reconstruct_pics, Backend, BackendKind, HttpBackend,
    MockBackend, ENDPOINT_ENV,
};
use textsketch::sketch::{extract_sketch, GradientEdgeDetector};
use textsketch::synthetic::synthetic_scene;

fn main() -> textsketch::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let text = args
        .first()
        .map_or("a red disc on a pale wall", String::as_str);
    let out = args.get(1).map_or("reconstruction.png", String::as_str);

    let backend: Box<dyn Backend> = if std::env::var_os(ENDPOINT_ENV).is_some() {
        Box::new(HttpBackend::from_env(
            BackendKind::TextSketch,
            Duration::from_secs(120),
        )?)
    } else {
        Box::new(MockBackend::default())
    };
    println!("backend {} {:?}", backend.kind(), backend.capabilities());

    let sketch = extract_sketch(&synthetic_scene(128, 128, 5)?, &GradientEdgeDetector)?;
    let with_sketch = reconstruct_pics(text, &sketch, 0, backend.as_ref())?;
    println!(
        "edge correlation with the sketch: {:.3}",
        edge_correlation(&with_sketch, &sketch)?
    );
    with_sketch.save(out)?;

    match reconstruct_pic(text, 0, 128, 128, backend.as_ref()) {
        Ok(img) => println!(
            "text only: edge correlation with the unused sketch {:.3}",
            edge_correlation(&img, &sketch)?
        ),
        Err(e) => println!("text only: {e}"),
    }
    Ok(())
}
