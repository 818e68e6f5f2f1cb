use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Backend, BackendKind, Capabilities, GenerationRequest};
use crate::core::Image;
use crate::error::Result;

const SKETCH_WEIGHT: f32 = 0.7;
const NOISE_WEIGHT: f32 = 0.3;

/// Deterministic stand-in for a diffusion model.
///
/// Luminance is `0.7 · sketch + 0.3 · value noise` when a sketch is given and
/// pure value noise otherwise; a colour tint derived from the prompt is added
/// with zero net luminance. Output size is the requested size.
#[derive(Debug, Clone)]
pub struct MockBackend {
    /// Lattice spacing of the value noise in pixels.
    pub cell: usize,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self { cell: 16 }
    }
}

fn digest(text: &str, seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(text.as_bytes());
    h.finalize().into()
}

fn smooth(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

impl MockBackend {
    /// Smooth value noise in `[0, 1]` seeded by `(text, seed)`.
    pub fn noise_field(&self, text: &str, seed: u64, width: usize, height: usize) -> Vec<f32> {
        let d = digest(text, seed);
        let mut rng = ChaCha8Rng::from_seed(d);
        let cell = self.cell.max(1);
        let (gw, gh) = (width / cell + 2, height / cell + 2);
        let lattice: Vec<f32> = (0..gw * gh).map(|_| rng.gen()).collect();
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            let fy = (y as f32 + 0.5) / cell as f32;
            let (iy, ty) = (fy.floor() as usize, smooth(fy.fract()));
            for x in 0..width {
                let fx = (x as f32 + 0.5) / cell as f32;
                let (ix, tx) = (fx.floor() as usize, smooth(fx.fract()));
                let at = |i: usize, j: usize| lattice[j * gw + i];
                let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
                let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
                out.push(top * (1.0 - ty) + bottom * ty);
            }
        }
        out
    }

    fn tint(text: &str) -> [f32; 3] {
        let d = digest(text, u64::MAX);
        let c = [
            d[0] as f32 / 255.0,
            d[1] as f32 / 255.0,
            d[2] as f32 / 255.0,
        ];
        let lum = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
        [c[0] - lum, c[1] - lum, c[2] - lum]
    }
}

impl Backend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            accepts_text_only: true,
            accepts_sketch: true,
            deterministic: true,
        }
    }

    fn generate(&self, req: &GenerationRequest<'_>) -> Result<Image> {
        let (w, h) = match req.sketch {
            Some(s) => (s.width(), s.height()),
            None => (req.width, req.height),
        };
        let noise = self.noise_field(req.text, req.seed, w, h);
        let luma: Vec<f32> = match req.sketch {
            Some(s) => s
                .data()
                .iter()
                .zip(&noise)
                .map(|(&e, &n)| SKETCH_WEIGHT * e + NOISE_WEIGHT * n)
                .collect(),
            None => noise,
        };
        let tint = Self::tint(req.text);
        Image::from_fn(w, h, |x, y| {
            let l = luma[y * w + x];
            // scaled so no channel leaves [0, 1]; luminance stays exactly `l`
            let amp = l.min(1.0 - l);
            [l + amp * tint[0], l + amp * tint[1], l + amp * tint[2]]
        })
    }
}
