//! Text-to-image reconstruction backends.
//!
//! A backend turns the decoded prompt (and, for PICS, the decoded sketch)
//! into an image. Production models live behind a process boundary
//! ([`HttpBackend`], [`SubprocessBackend`]); [`MockBackend`] is a pure,
//! seeded stand-in used by tests and the benchmark harness.

mod http;
mod mock;

pub use http::{GenerationPayload, HttpBackend, RetryPolicy, SubprocessBackend, ENDPOINT_ENV};
pub use mock::MockBackend;

use serde::{Deserialize, Serialize};

use crate::core::{Image, SketchMap};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLER_STEPS: u32 = 50;
pub const DEFAULT_GUIDANCE: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[serde(rename = "text")]
    TextOnly,
    #[serde(rename = "text+sketch")]
    TextSketch,
    Mock,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::TextOnly => "text",
            BackendKind::TextSketch => "text+sketch",
            BackendKind::Mock => "mock",
        })
    }
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(BackendKind::TextOnly),
            "text+sketch" => Ok(BackendKind::TextSketch),
            "mock" => Ok(BackendKind::Mock),
            other => Err(Error::Config(format!(
                "unknown backend {other:?} (expected mock, text, or text+sketch)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub accepts_text_only: bool,
    pub accepts_sketch: bool,
    pub deterministic: bool,
}

/// Everything a backend needs for one sample.
#[derive(Debug, Clone)]
pub struct GenerationRequest<'a> {
    pub text: &'a str,
    pub sketch: Option<&'a SketchMap>,
    pub seed: u64,
    /// Size the caller will resize the output to.
    pub width: usize,
    pub height: usize,
    pub steps: u32,
    pub guidance: f64,
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn capabilities(&self) -> Capabilities;

    /// One sample at the backend's own output resolution.
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Image>;

    fn sampler(&self) -> (u32, f64) {
        (DEFAULT_SAMPLER_STEPS, DEFAULT_GUIDANCE)
    }
}

fn finish(image: Image, width: usize, height: usize) -> Result<Image> {
    if (image.width(), image.height()) == (width, height) {
        Ok(image)
    } else {
        image.resized(width, height)
    }
}

/// Text-only reconstruction, resized to `(width, height)`.
pub fn reconstruct_pic(
    text: &str,
    seed: u64,
    width: usize,
    height: usize,
    backend: &dyn Backend,
) -> Result<Image> {
    if !backend.capabilities().accepts_text_only {
        return Err(Error::Capability(format!(
            "{} backend cannot generate without a sketch",
            backend.kind()
        )));
    }
    let (steps, guidance) = backend.sampler();
    let image = backend.generate(&GenerationRequest {
        text,
        sketch: None,
        seed,
        width,
        height,
        steps,
        guidance,
    })?;
    finish(image, width, height)
}

/// Text plus sketch reconstruction at the sketch's resolution.
pub fn reconstruct_pics(
    text: &str,
    sketch: &SketchMap,
    seed: u64,
    backend: &dyn Backend,
) -> Result<Image> {
    if !backend.capabilities().accepts_sketch {
        return Err(Error::Capability(format!(
            "{} backend does not accept a sketch",
            backend.kind()
        )));
    }
    let (width, height) = (sketch.width(), sketch.height());
    let (steps, guidance) = backend.sampler();
    let image = backend.generate(&GenerationRequest {
        text,
        sketch: Some(sketch),
        seed,
        width,
        height,
        steps,
        guidance,
    })?;
    finish(image, width, height)
}

/// Pearson correlation between the luminance of `image` and the sketch it was
/// conditioned on.
///
/// Sketch-conditioned backends paint the edge map into the output, so the
/// luminance is where the sketch's structure shows up.
pub fn edge_correlation(image: &Image, sketch: &SketchMap) -> Result<f64> {
    same_size(image, sketch)?;
    pearson(&image.luminance(), sketch.data())
}

/// Pearson correlation between the gradient edge map of `image` and `sketch`.
///
/// Stricter than [`edge_correlation`]: a painted line of width 2 produces
/// gradient response on its flanks, so even a perfect copy scores well below 1.
pub fn gradient_edge_correlation(image: &Image, sketch: &SketchMap) -> Result<f64> {
    use crate::sketch::{extract_sketch, GradientEdgeDetector};
    same_size(image, sketch)?;
    pearson(
        extract_sketch(image, &GradientEdgeDetector)?.data(),
        sketch.data(),
    )
}

fn same_size(image: &Image, sketch: &SketchMap) -> Result<()> {
    if (image.width(), image.height()) != (sketch.width(), sketch.height()) {
        return Err(Error::Shape(format!(
            "image {}x{} vs sketch {}x{}",
            image.width(),
            image.height(),
            sketch.width(),
            sketch.height()
        )));
    }
    Ok(())
}

pub(crate) fn pearson(a: &[f32], b: &[f32]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Domain("correlation of a constant map".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
