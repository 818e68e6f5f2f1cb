use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::core::Image;
use crate::error::{Error, Result};

/// A joint text–image embedding model with a token codebook.
///
/// Prompts are passed as flat `L × embed_dim` row-major matrices of token
/// embeddings. Implementations must be deterministic.
pub trait Embedder: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn embed_dim(&self) -> usize;

    /// `vocab_size × embed_dim`, row-major.
    fn codebook(&self) -> &[f32];

    fn encode_image(&self, image: &Image) -> Result<Vec<f32>>;

    fn encode_text(&self, prompt: &[f32]) -> Result<Vec<f32>>;

    /// Vector-Jacobian product of `encode_text` at `prompt`.
    fn text_vjp(&self, prompt: &[f32], cotangent: &[f32]) -> Result<Vec<f32>>;

    /// Identifier recorded next to metrics computed with this embedder.
    fn variant(&self) -> String {
        "custom".to_string()
    }

    fn codebook_row(&self, id: usize) -> &[f32] {
        let d = self.embed_dim();
        &self.codebook()[id * d..(id + 1) * d]
    }
}

/// Embedder whose image encoder returns a fixed vector and whose text encoder
/// is the mean of the token embeddings.
#[derive(Debug, Clone)]
pub struct ToyEmbedder {
    dim: usize,
    codebook: Vec<f32>,
    image_feature: Vec<f32>,
}

impl ToyEmbedder {
    pub fn new(codebook: Vec<f32>, dim: usize, image_feature: Vec<f32>) -> Result<Self> {
        if dim == 0 || codebook.is_empty() || !codebook.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "codebook of {} values is not a whole number of {dim}-dim rows",
                codebook.len()
            )));
        }
        if image_feature.len() != dim {
            return Err(Error::Shape(format!(
                "image feature has {} dims, expected {dim}",
                image_feature.len()
            )));
        }
        if codebook
            .iter()
            .chain(&image_feature)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Domain("non-finite embedding value".into()));
        }
        Ok(Self {
            dim,
            codebook,
            image_feature,
        })
    }

    /// Standard-normal codebook and image feature.
    pub fn random(vocab: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codebook = (0..vocab * dim)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let image_feature = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        Self::new(codebook, dim, image_feature).expect("shapes are consistent")
    }

    pub fn image_feature(&self) -> &[f32] {
        &self.image_feature
    }
}

impl Embedder for ToyEmbedder {
    fn vocab_size(&self) -> usize {
        self.codebook.len() / self.dim
    }

    fn embed_dim(&self) -> usize {
        self.dim
    }

    fn codebook(&self) -> &[f32] {
        &self.codebook
    }

    fn encode_image(&self, _image: &Image) -> Result<Vec<f32>> {
        Ok(self.image_feature.clone())
    }

    fn encode_text(&self, prompt: &[f32]) -> Result<Vec<f32>> {
        mean_rows(prompt, self.dim)
    }

    fn text_vjp(&self, prompt: &[f32], cotangent: &[f32]) -> Result<Vec<f32>> {
        mean_rows_vjp(prompt, cotangent, self.dim)
    }

    fn variant(&self) -> String {
        format!("toy-v{}-d{}", self.vocab_size(), self.dim)
    }
}

/// Pure-math stand-in for a pre-trained joint embedder.
///
/// Images are summarized by pooled luminance, pooled gradient energy and
/// mean colour, then mapped through a fixed random projection. Text is the
/// mean token embedding mapped through a second fixed projection.
#[derive(Debug, Clone)]
pub struct ProjectionEmbedder {
    embed_dim: usize,
    out_dim: usize,
    seed: u64,
    codebook: Vec<f32>,
    image_proj: Vec<f32>,
    text_proj: Vec<f32>,
}

const POOL: usize = 4;
// pooled luminance, pooled gradient energy, mean RGB, constant bias
const IMAGE_FEATURES: usize = 2 * POOL * POOL + 4;

impl ProjectionEmbedder {
    pub fn new(vocab: usize, embed_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |n: usize, scale: f32| -> Vec<f32> {
            (0..n)
                .map(|_| rng.sample::<f32, _>(StandardNormal) * scale)
                .collect()
        };
        let codebook = normal(vocab * embed_dim, 1.0);
        let image_proj = normal(
            out_dim * IMAGE_FEATURES,
            1.0 / (IMAGE_FEATURES as f32).sqrt(),
        );
        let text_proj = normal(out_dim * embed_dim, 1.0 / (embed_dim as f32).sqrt());
        Self {
            embed_dim,
            out_dim,
            seed,
            codebook,
            image_proj,
            text_proj,
        }
    }

    fn image_summary(image: &Image) -> Vec<f32> {
        let (w, h) = (image.width(), image.height());
        let lum = image.luminance();
        let mut feats = vec![0.0f32; IMAGE_FEATURES];
        let mut counts = [0.0f32; POOL * POOL];
        for y in 0..h {
            for x in 0..w {
                let cell = (y * POOL / h) * POOL + x * POOL / w;
                let v = lum[y * w + x];
                let gx = lum[y * w + (x + 1).min(w - 1)] - lum[y * w + x.saturating_sub(1)];
                let gy = lum[(y + 1).min(h - 1) * w + x] - lum[y.saturating_sub(1) * w + x];
                feats[cell] += v - 0.5;
                feats[POOL * POOL + cell] += (gx * gx + gy * gy).sqrt();
                counts[cell] += 1.0;
            }
        }
        for cell in 0..POOL * POOL {
            feats[cell] /= counts[cell];
            feats[POOL * POOL + cell] = 4.0 * feats[POOL * POOL + cell] / counts[cell];
        }
        for c in 0..3 {
            let plane = image.channel(c);
            feats[2 * POOL * POOL + c] = plane.iter().sum::<f32>() / plane.len() as f32 - 0.5;
        }
        feats[IMAGE_FEATURES - 1] = 0.25;
        feats
    }
}

impl Embedder for ProjectionEmbedder {
    fn vocab_size(&self) -> usize {
        self.codebook.len() / self.embed_dim
    }

    fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    fn codebook(&self) -> &[f32] {
        &self.codebook
    }

    fn encode_image(&self, image: &Image) -> Result<Vec<f32>> {
        Ok(matvec(
            &self.image_proj,
            &Self::image_summary(image),
            self.out_dim,
        ))
    }

    fn encode_text(&self, prompt: &[f32]) -> Result<Vec<f32>> {
        let mean = mean_rows(prompt, self.embed_dim)?;
        Ok(matvec(&self.text_proj, &mean, self.out_dim))
    }

    fn text_vjp(&self, prompt: &[f32], cotangent: &[f32]) -> Result<Vec<f32>> {
        if cotangent.len() != self.out_dim {
            return Err(Error::Shape(format!(
                "cotangent has {} dims, expected {}",
                cotangent.len(),
                self.out_dim
            )));
        }
        let d = self.embed_dim;
        let mut g_mean = vec![0.0f32; d];
        for (o, &c) in cotangent.iter().enumerate() {
            for (j, g) in g_mean.iter_mut().enumerate() {
                *g += self.text_proj[o * d + j] * c;
            }
        }
        mean_rows_vjp(prompt, &g_mean, d)
    }

    fn variant(&self) -> String {
        format!(
            "projection-v{}-d{}-o{}-s{}",
            self.vocab_size(),
            self.embed_dim,
            self.out_dim,
            self.seed
        )
    }
}

fn matvec(m: &[f32], v: &[f32], rows: usize) -> Vec<f32> {
    let cols = v.len();
    (0..rows)
        .map(|r| {
            m[r * cols..(r + 1) * cols]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

fn mean_rows(prompt: &[f32], dim: usize) -> Result<Vec<f32>> {
    if prompt.is_empty() || !prompt.len().is_multiple_of(dim) {
        return Err(Error::Shape(format!(
            "prompt of {} values is not a whole number of {dim}-dim rows",
            prompt.len()
        )));
    }
    let rows = prompt.len() / dim;
    let mut out = vec![0.0f32; dim];
    for row in prompt.chunks_exact(dim) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= rows as f32);
    Ok(out)
}

fn mean_rows_vjp(prompt: &[f32], cotangent: &[f32], dim: usize) -> Result<Vec<f32>> {
    if cotangent.len() != dim || prompt.is_empty() || !prompt.len().is_multiple_of(dim) {
        return Err(Error::Shape("prompt/cotangent shape mismatch".into()));
    }
    let rows = prompt.len() / dim;
    let scaled: Vec<f32> = cotangent.iter().map(|c| c / rows as f32).collect();
    Ok(scaled.iter().cycle().take(prompt.len()).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_diff_check(e: &dyn Embedder, prompt: &[f32], cot: &[f32]) {
        let vjp = e.text_vjp(prompt, cot).unwrap();
        let f = |p: &[f32]| -> f64 {
            e.encode_text(p)
                .unwrap()
                .iter()
                .zip(cot)
                .map(|(a, b)| (*a as f64) * (*b as f64))
                .sum()
        };
        for i in 0..prompt.len() {
            let h = 1e-2f32;
            let mut p = prompt.to_vec();
            p[i] += h;
            let up = f(&p);
            p[i] -= 2.0 * h;
            let down = f(&p);
            let fd = (up - down) / (2.0 * h as f64);
            assert!(
                (fd - vjp[i] as f64).abs() < 1e-3,
                "coord {i}: {fd} vs {}",
                vjp[i]
            );
        }
    }

    #[test]
    fn vjps_match_finite_differences() {
        let toy = ToyEmbedder::random(5, 3, 1);
        finite_diff_check(&toy, &toy.codebook()[..6], &[0.3, -1.0, 2.0]);

        let proj = ProjectionEmbedder::new(10, 4, 6, 2);
        let cot = [0.5, -0.2, 1.0, 0.0, 0.7, -1.3];
        finite_diff_check(&proj, &proj.codebook()[..12], &cot);
    }

    #[test]
    fn projection_image_encoder_is_deterministic_and_structure_aware() {
        let e = ProjectionEmbedder::new(16, 4, 8, 3);
        let flat = Image::from_fn(32, 32, |_, _| [0.5; 3]).unwrap();
        let striped = Image::from_fn(32, 32, |x, _| [(x / 4 % 2) as f32; 3]).unwrap();
        let a = e.encode_image(&striped).unwrap();
        assert_eq!(a, e.encode_image(&striped).unwrap());
        assert_ne!(a, e.encode_image(&flat).unwrap());
    }
}
