//! Shared domain types, rate accounting, and the container format.

pub mod container;
pub mod image;
pub mod report;
pub mod tokens;

pub use container::{
    read_container, write_container, Container, Mode, TokenCoding, FILE_EXTENSION,
};
pub use image::{Image, SketchMap};
pub use report::RateReport;
pub use tokens::{TokenSequence, DEFAULT_PROMPT_LENGTH};

use crate::error::{Error, Result};

/// Cosine of the angle between two vectors, accumulated in f64.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "vectors have dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    // sqrt(nu * nv) is exact when u == v, so identical inputs give exactly 1
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

/// Bits per pixel.
pub fn compute_bpp(total_bits: u64, width: usize, height: usize) -> Result<f64> {
    let pixels = width as u64 * height as u64;
    if pixels == 0 {
        return Err(Error::Domain(format!("zero-area image {width}x{height}")));
    }
    Ok(total_bits as f64 / pixels as f64)
}
