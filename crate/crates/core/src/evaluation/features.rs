use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::core::Image;
use crate::error::Result;

/// Maps an image to a fixed-length feature vector for FID and KID.
pub trait FeatureExtractor: Send + Sync {
    fn dim(&self) -> usize;

    fn extract(&self, image: &Image) -> Result<Vec<f32>>;

    fn variant(&self) -> String;
}

const GRID: usize = 8;
const INPUTS: usize = GRID * GRID * 4;

/// Fixed random linear projection of an 8×8 pooled RGB + gradient-energy
/// summary. Deterministic given the seed.
#[derive(Debug, Clone)]
pub struct RandomProjectionFeatures {
    dim: usize,
    seed: u64,
    proj: Vec<f32>,
}

impl RandomProjectionFeatures {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (INPUTS as f32).sqrt();
        let proj = (0..dim * INPUTS)
            .map(|_| rng.sample::<f32, _>(StandardNormal) * scale)
            .collect();
        Self { dim, seed, proj }
    }

    fn pooled(image: &Image) -> Vec<f32> {
        let (w, h) = (image.width(), image.height());
        let lum = image.luminance();
        let mut sums = vec![0.0f32; INPUTS];
        let mut counts = vec![0.0f32; GRID * GRID];
        for y in 0..h {
            for x in 0..w {
                let cell = (y * GRID / h) * GRID + x * GRID / w;
                let px = image.pixel(x, y);
                for c in 0..3 {
                    sums[cell * 4 + c] += px[c] - 0.5;
                }
                let gx = lum[y * w + (x + 1).min(w - 1)] - lum[y * w + x.saturating_sub(1)];
                let gy = lum[(y + 1).min(h - 1) * w + x] - lum[y.saturating_sub(1) * w + x];
                sums[cell * 4 + 3] += (gx * gx + gy * gy).sqrt();
                counts[cell] += 1.0;
            }
        }
        for (i, s) in sums.iter_mut().enumerate() {
            *s /= counts[i / 4].max(1.0);
        }
        sums
    }
}

impl Default for RandomProjectionFeatures {
    fn default() -> Self {
        Self::new(64, 11)
    }
}

impl FeatureExtractor for RandomProjectionFeatures {
    fn dim(&self) -> usize {
        self.dim
    }

    fn extract(&self, image: &Image) -> Result<Vec<f32>> {
        let x = Self::pooled(image);
        Ok(self
            .proj
            .chunks(INPUTS)
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn variant(&self) -> String {
        format!("random-projection-d{}-s{}", self.dim, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::synthetic_scene;

    #[test]
    fn features_are_deterministic_with_fixed_dim() {
        let f = RandomProjectionFeatures::new(16, 3);
        let img = synthetic_scene(20, 12, 1).unwrap();
        let a = f.extract(&img).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(
            a,
            RandomProjectionFeatures::new(16, 3).extract(&img).unwrap()
        );
        assert_ne!(a, f.extract(&synthetic_scene(20, 12, 2).unwrap()).unwrap());
        // sides that do not divide into the pooling grid still fill every cell
        let tiny = synthetic_scene(9, 8, 1).unwrap();
        assert_eq!(f.extract(&tiny).unwrap().len(), 16);
    }
}
