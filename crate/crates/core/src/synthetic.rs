//! Seeded synthetic scenes for tests, examples, and benchmarks.
//!
//! Scenes are a smooth background with a few flat-coloured rectangles and
//! discs, so their edge maps are sparse outlines like real sketches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{Image, SketchMap};
use crate::error::Result;
use crate::sketch::{extract_sketch, GradientEdgeDetector};

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect { x0: f32, y0: f32, x1: f32, y1: f32 },
    Disc { cx: f32, cy: f32, r: f32 },
}

impl Shape {
    fn contains(&self, x: f32, y: f32) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
        }
    }
}

/// A deterministic scene; the same `(width, height, seed)` always gives the same pixels.
pub fn synthetic_scene(width: usize, height: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg_a: [f32; 3] = [
        rng.gen_range(0.3..0.7),
        rng.gen_range(0.3..0.7),
        rng.gen_range(0.3..0.7),
    ];
    let bg_b: [f32; 3] = [
        rng.gen_range(0.3..0.7),
        rng.gen_range(0.3..0.7),
        rng.gen_range(0.3..0.7),
    ];
    let count = rng.gen_range(2..=5);
    let (w, h) = (width as f32, height as f32);
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        // shapes are clearly darker or lighter than the background
        let dark = rng.gen_bool(0.5);
        let colour: [f32; 3] = std::array::from_fn(|_| {
            let v: f32 = rng.gen_range(0.0..0.25);
            if dark {
                v
            } else {
                1.0 - v
            }
        });
        let shape = if rng.gen_bool(0.5) {
            let x0 = rng.gen_range(0.0..0.8) * w;
            let y0 = rng.gen_range(0.0..0.8) * h;
            Shape::Rect {
                x0,
                y0,
                x1: x0 + rng.gen_range(0.15..0.5) * w,
                y1: y0 + rng.gen_range(0.15..0.5) * h,
            }
        } else {
            Shape::Disc {
                cx: rng.gen_range(0.1..0.9) * w,
                cy: rng.gen_range(0.1..0.9) * h,
                r: rng.gen_range(0.08..0.3) * w.min(h),
            }
        };
        shapes.push((shape, colour));
    }
    Image::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f32 + 0.5, y as f32 + 0.5);
        let t = yf / h;
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = bg_a[c] * (1.0 - t) + bg_b[c] * t;
        }
        for (shape, colour) in &shapes {
            if shape.contains(xf, yf) {
                px = *colour;
            }
        }
        px
    })
}

/// `count` scenes with consecutive seeds starting at `seed`.
pub fn synthetic_scenes(
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<Image>> {
    (0..count as u64)
        .map(|i| synthetic_scene(width, height, seed.wrapping_add(i)))
        .collect()
}

/// Fallback-detector sketches of [`synthetic_scenes`].
pub fn synthetic_sketches(
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<SketchMap>> {
    synthetic_scenes(count, width, height, seed)?
        .iter()
        .map(|img| extract_sketch(img, &GradientEdgeDetector))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_varied() {
        let a = synthetic_scene(32, 24, 9).unwrap();
        assert_eq!(a, synthetic_scene(32, 24, 9).unwrap());
        assert_ne!(a, synthetic_scene(32, 24, 10).unwrap());
    }

    #[test]
    fn sketches_are_sparse() {
        for s in synthetic_sketches(8, 64, 64, 0).unwrap() {
            let on = s.data().iter().filter(|&&v| v > 0.1).count();
            assert!(on > 0 && on < 64 * 64 / 3, "{on}");
        }
    }
}
