//! End-to-end compress / decompress over the container format.

use serde::{Deserialize, Serialize};

use crate::core::{Container, Image, Mode, RateReport, SketchMap, TokenCoding, TokenSequence};
use crate::decoder::{reconstruct_pic, reconstruct_pics, Backend};
use crate::error::{Error, Result};
use crate::inversion::{invert_prompt, Embedder, PiConfig, ProjectionEmbedder};
use crate::sketch::{decode_sketch, encode_sketch, extract_sketch, EdgeDetector, NtcModel};
use crate::token_codec::{
    decode_prompt_text, encode_text_lossless, TokenPayload, Tokenizer, WordPieceVocab,
};

/// Encoder-side components and settings.
pub struct Encoder<'a> {
    pub embedder: &'a dyn Embedder,
    pub tokenizer: &'a dyn Tokenizer,
    pub detector: &'a dyn EdgeDetector,
    /// Required for PICS.
    pub sketch_model: Option<&'a NtcModel>,
    pub pi: PiConfig,
    pub token_coding: TokenCoding,
}

#[derive(Debug, Clone)]
pub struct Compressed {
    pub bytes: Vec<u8>,
    pub container: Container,
    pub report: RateReport,
    pub tokens: TokenSequence,
    /// Cosine objective reached by the inverted prompt.
    pub objective: f64,
    /// Sketch extracted from the source image (PICS only).
    pub sketch: Option<SketchMap>,
    /// Text coding was requested but fixed-width ids were emitted.
    pub token_fell_back: bool,
}

/// Tokens already inverted for an image, reusable across modes.
#[derive(Debug, Clone)]
pub struct Prompt {
    pub tokens: TokenSequence,
    pub objective: f64,
}

impl Encoder<'_> {
    fn check(&self) -> Result<()> {
        if self.tokenizer.vocab_size() != self.embedder.vocab_size() {
            return Err(Error::Config(format!(
                "tokenizer has {} entries, embedder codebook has {}",
                self.tokenizer.vocab_size(),
                self.embedder.vocab_size()
            )));
        }
        self.pi.validate()
    }

    /// Runs prompt inversion only.
    pub fn invert(&self, image: &Image) -> Result<Prompt> {
        self.check()?;
        let inv = invert_prompt(image, self.embedder, &self.pi)?;
        Ok(Prompt {
            tokens: inv.tokens,
            objective: inv.objective,
        })
    }

    /// Full encoder path.
    pub fn compress(&self, image: &Image, image_id: &str, mode: Mode) -> Result<Compressed> {
        let prompt = self.invert(image)?;
        self.compress_with_prompt(image, image_id, mode, &prompt)
    }

    /// Encoder path with a precomputed prompt.
    pub fn compress_with_prompt(
        &self,
        image: &Image,
        image_id: &str,
        mode: Mode,
        prompt: &Prompt,
    ) -> Result<Compressed> {
        self.check()?;
        prompt.tokens.expect_len(self.pi.prompt_length)?;
        let payload = match self.token_coding {
            TokenCoding::FixedWidth => TokenPayload::fixed(&prompt.tokens)?,
            TokenCoding::Text => encode_text_lossless(&prompt.tokens, self.tokenizer)?,
        };
        let (sketch, sketch_bytes) = match mode {
            Mode::Pic => (None, None),
            Mode::Pics => {
                let model = self
                    .sketch_model
                    .ok_or_else(|| Error::Config("PICS mode needs a sketch model".into()))?;
                let sketch = extract_sketch(image, self.detector)?;
                let bytes = encode_sketch(&sketch, model)?;
                (Some(sketch), Some(bytes))
            }
        };
        let container = Container::new(
            mode,
            image.width(),
            image.height(),
            payload.coding,
            payload.bytes,
            sketch_bytes,
        )?;
        let bytes = container.to_bytes()?;
        let report = RateReport::from_container(image_id, &container)?;
        Ok(Compressed {
            bytes,
            container,
            report,
            tokens: prompt.tokens.clone(),
            objective: prompt.objective,
            sketch,
            token_fell_back: payload.fell_back,
        })
    }
}

/// Decoder-side components and settings.
pub struct Decoder<'a> {
    pub tokenizer: &'a dyn Tokenizer,
    pub prompt_length: usize,
    /// Required for PICS containers.
    pub sketch_model: Option<&'a NtcModel>,
    pub backend: &'a dyn Backend,
}

#[derive(Debug, Clone)]
pub struct Decompressed {
    pub image: Image,
    /// Prompt handed to the backend.
    pub text: String,
    pub container: Container,
    /// Decoded sketch (PICS only).
    pub sketch: Option<SketchMap>,
    pub report: RateReport,
}

impl Decoder<'_> {
    /// Full decoder path; `seed` drives the backend sampler.
    pub fn decompress(&self, bytes: &[u8], image_id: &str, seed: u64) -> Result<Decompressed> {
        let container = Container::from_bytes(bytes)?;
        let text = decode_prompt_text(
            container.token_coding,
            &container.token_payload,
            self.prompt_length,
            self.tokenizer,
        )?;
        let (w, h) = (container.width as usize, container.height as usize);
        let mut report = RateReport::from_container(image_id, &container)?;
        let (steps, guidance) = self.backend.sampler();
        report.sampler_steps = steps;
        report.guidance = guidance as f32;
        log::info!(
            "{image_id}: prompt {text:?}; {:.5} bpp total, {:.5} bpp sketch",
            report.bpp,
            report.sketch_bpp()
        );
        let (image, sketch) = match (container.mode, &container.sketch_payload) {
            (Mode::Pic, _) => (reconstruct_pic(&text, seed, w, h, self.backend)?, None),
            (Mode::Pics, Some(payload)) => {
                if !self.backend.capabilities().accepts_sketch {
                    return Err(Error::Capability(format!(
                        "PICS container needs a sketch-conditioned backend, got {}",
                        self.backend.kind()
                    )));
                }
                let model = self
                    .sketch_model
                    .ok_or_else(|| Error::Config("PICS container needs a sketch model".into()))?;
                let sketch = decode_sketch(payload, model)?;
                if (sketch.width(), sketch.height()) != (w, h) {
                    return Err(Error::Decode(format!(
                        "sketch is {}x{}, container records {w}x{h}",
                        sketch.width(),
                        sketch.height()
                    )));
                }
                (
                    reconstruct_pics(&text, &sketch, seed, self.backend)?,
                    Some(sketch),
                )
            }
            (Mode::Pics, None) => {
                return Err(Error::Format("PICS container without sketch".into()))
            }
        };
        Ok(Decompressed {
            image,
            text,
            container,
            sketch,
            report,
        })
    }
}

/// Sizes of the offline embedder and vocabulary stand-ins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StandInSettings {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for StandInSettings {
    fn default() -> Self {
        Self {
            vocab_size: 2048,
            embed_dim: 32,
            feature_dim: 64,
            seed: 7,
        }
    }
}

/// Embedder and tokenizer built from [`StandInSettings`]; both sides of a
/// link must use the same settings.
#[derive(Debug, Clone)]
pub struct StandIns {
    pub embedder: ProjectionEmbedder,
    pub tokenizer: WordPieceVocab,
}

impl StandIns {
    pub fn new(settings: &StandInSettings) -> Result<Self> {
        if settings.vocab_size < 2 || settings.embed_dim == 0 || settings.feature_dim == 0 {
            return Err(Error::Config(format!(
                "invalid stand-in sizes {settings:?}"
            )));
        }
        Ok(Self {
            embedder: ProjectionEmbedder::new(
                settings.vocab_size,
                settings.embed_dim,
                settings.feature_dim,
                settings.seed,
            ),
            tokenizer: WordPieceVocab::synthetic(settings.vocab_size),
        })
    }
}
