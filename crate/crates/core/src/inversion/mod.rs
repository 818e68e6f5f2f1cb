//! Hard-prompt inversion: projected gradient search over an embedder's
//! token codebook, maximizing cosine similarity between the image embedding
//! and the text embedding of the projected prompt.

mod embedder;

pub use embedder::{Embedder, ProjectionEmbedder, ToyEmbedder};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{cosine_similarity, Image, TokenSequence, DEFAULT_PROMPT_LENGTH};
use crate::error::{Error, Result};
use crate::optim::Adam;

/// Continuous `rows × dim` prompt embeddings, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPrompt {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl SoftPrompt {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 || data.len() != rows * dim {
            return Err(Error::Shape(format!(
                "{} values do not form a {rows}x{dim} prompt",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("soft prompt has non-finite entries".into()));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Prompt made of codebook rows.
    pub fn from_tokens(tokens: &TokenSequence, embedder: &dyn Embedder) -> Result<Self> {
        let d = embedder.embed_dim();
        if tokens.vocab_size() as usize != embedder.vocab_size() {
            return Err(Error::Shape(format!(
                "tokens use vocabulary {}, embedder has {}",
                tokens.vocab_size(),
                embedder.vocab_size()
            )));
        }
        let mut data = Vec::with_capacity(tokens.len() * d);
        for &id in tokens.ids() {
            data.extend_from_slice(embedder.codebook_row(id as usize));
        }
        Self::new(tokens.len(), d, data)
    }
}

/// Settings for [`invert_prompt`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PiConfig {
    pub prompt_length: usize,
    pub step_count: usize,
    pub learning_rate: f64,
    pub restart_count: usize,
    pub seed: u64,
}

impl Default for PiConfig {
    fn default() -> Self {
        Self {
            prompt_length: DEFAULT_PROMPT_LENGTH,
            step_count: 1000,
            learning_rate: 0.1,
            restart_count: 3,
            seed: 0,
        }
    }
}

impl PiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prompt_length == 0 {
            return Err(Error::Config("prompt_length must be at least 1".into()));
        }
        if self.step_count == 0 {
            return Err(Error::Config("step_count must be at least 1".into()));
        }
        if self.restart_count == 0 {
            return Err(Error::Config("restart_count must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Nearest codebook row (Euclidean) for each prompt row; lowest index wins ties.
pub fn project_to_codebook(
    soft: &SoftPrompt,
    embedder: &dyn Embedder,
) -> Result<(TokenSequence, SoftPrompt)> {
    let d = embedder.embed_dim();
    if soft.dim != d {
        return Err(Error::Shape(format!(
            "prompt rows have {} dims, codebook rows have {d}",
            soft.dim
        )));
    }
    let vocab = embedder.vocab_size();
    let mut ids = Vec::with_capacity(soft.rows);
    let mut hard = Vec::with_capacity(soft.data.len());
    for r in 0..soft.rows {
        let row = soft.row(r);
        let mut best = (f64::INFINITY, 0usize);
        for id in 0..vocab {
            let dist: f64 = embedder
                .codebook_row(id)
                .iter()
                .zip(row)
                .map(|(a, b)| {
                    let diff = (*a - *b) as f64;
                    diff * diff
                })
                .sum();
            if dist < best.0 {
                best = (dist, id);
            }
        }
        ids.push(best.1 as u32);
        hard.extend_from_slice(embedder.codebook_row(best.1));
    }
    Ok((
        TokenSequence::new(ids, vocab as u32)?,
        SoftPrompt::new(soft.rows, d, hard)?,
    ))
}

/// Result of a prompt inversion run.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub tokens: TokenSequence,
    /// Objective achieved by `tokens`.
    pub objective: f64,
    /// Objective of the projected prompt at every step, restarts concatenated.
    pub trace: Vec<f64>,
    /// Running maximum of `trace`.
    pub best_so_far: Vec<f64>,
}

/// Cosine objective of a hard prompt against a target image embedding.
pub fn prompt_objective(
    target: &[f32],
    tokens: &TokenSequence,
    embedder: &dyn Embedder,
) -> Result<f64> {
    let prompt = SoftPrompt::from_tokens(tokens, embedder)?;
    cosine_similarity(target, &embedder.encode_text(prompt.data())?)
}

/// Recovers the hard prompt whose text embedding best matches the image.
///
/// The objective is evaluated at the projected prompt while the gradient
/// step is applied to the continuous prompt. The returned tokens are the best
/// seen over every step of every restart.
pub fn invert_prompt(
    image: &Image,
    embedder: &dyn Embedder,
    config: &PiConfig,
) -> Result<Inversion> {
    config.validate()?;
    let target = embedder.encode_image(image)?;
    invert_embedding(&target, embedder, config)
}

/// [`invert_prompt`] against a precomputed image embedding.
pub fn invert_embedding(
    target: &[f32],
    embedder: &dyn Embedder,
    config: &PiConfig,
) -> Result<Inversion> {
    config.validate()?;
    if target.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("image embedding is the zero vector".into()));
    }
    let vocab = embedder.vocab_size();
    let d = embedder.embed_dim();
    let rows = config.prompt_length;

    let mut trace = Vec::with_capacity(config.restart_count * (config.step_count + 1));
    let mut best: Option<(f64, TokenSequence)> = None;

    for restart in 0..config.restart_count {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let mut soft = Vec::with_capacity(rows * d);
        for _ in 0..rows {
            soft.extend_from_slice(embedder.codebook_row(rng.gen_range(0..vocab)));
        }
        let mut opt = Adam::new(soft.len(), config.learning_rate);

        for step in 0..=config.step_count {
            let global_step = trace.len();
            let (tokens, hard) =
                project_to_codebook(&SoftPrompt::new(rows, d, soft.clone())?, embedder)?;
            let text = embedder.encode_text(hard.data())?;
            let cos = cosine_similarity(target, &text).map_err(|e| Error::Numerical {
                step: global_step,
                what: e.to_string(),
            })?;
            if !cos.is_finite() {
                return Err(Error::Numerical {
                    step: global_step,
                    what: "objective".into(),
                });
            }
            trace.push(cos);
            if best.as_ref().is_none_or(|(b, _)| cos > *b) {
                best = Some((cos, tokens));
            }
            if step == config.step_count {
                break;
            }

            let g_text = cosine_gradient(target, &text, cos);
            let g_hard = embedder.text_vjp(hard.data(), &g_text)?;
            if g_hard.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical {
                    step: global_step,
                    what: "gradient".into(),
                });
            }
            // ascent on the objective
            let descent: Vec<f32> = g_hard.iter().map(|g| -g).collect();
            opt.step(&mut soft, &descent);
        }
    }

    let best_so_far = trace
        .iter()
        .scan(f64::NEG_INFINITY, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect();
    let (objective, tokens) = best.expect("at least one step runs");
    Ok(Inversion {
        tokens,
        objective,
        trace,
        best_so_far,
    })
}

/// d/dt of cos(a, t).
fn cosine_gradient(a: &[f32], t: &[f32], cos: f64) -> Vec<f32> {
    let na = a.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
    let nt2 = t.iter().map(|v| (*v as f64).powi(2)).sum::<f64>();
    let nt = nt2.sqrt();
    a.iter()
        .zip(t)
        .map(|(&ai, &ti)| (ai as f64 / (na * nt) - cos * ti as f64 / nt2) as f32)
        .collect()
}
