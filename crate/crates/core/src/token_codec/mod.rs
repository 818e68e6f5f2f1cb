//! Lossless coding of the prompt into the text bitstream.

mod fixed;
mod tokenizer;

pub use fixed::{decode_tokens_fixed, encode_tokens_fixed, id_width};
pub use tokenizer::{Tokenizer, WordPieceVocab};

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use crate::core::{TokenCoding, TokenSequence};
use crate::error::{Error, Result};

/// Text mode may exceed fixed-width by at most this many bytes before falling back.
pub const TEXT_REGRET_BYTES: usize = 16;

/// Coded prompt as carried in the container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenPayload {
    pub coding: TokenCoding,
    pub bytes: Vec<u8>,
    pub bit_count: usize,
    /// Set when text mode was requested but fixed-width was emitted.
    pub fell_back: bool,
}

impl TokenPayload {
    pub fn fixed(tokens: &TokenSequence) -> Result<Self> {
        let (bytes, bit_count) = encode_tokens_fixed(tokens)?;
        Ok(Self {
            coding: TokenCoding::FixedWidth,
            bytes,
            bit_count,
            fell_back: false,
        })
    }
}

/// Renders the prompt to text and deflates it.
///
/// Falls back to fixed-width ids when the text does not re-tokenize to the
/// same ids, or when the compressed text is more than
/// [`TEXT_REGRET_BYTES`] larger than the fixed-width payload.
pub fn encode_text_lossless(
    tokens: &TokenSequence,
    tokenizer: &dyn Tokenizer,
) -> Result<TokenPayload> {
    let mut fixed = TokenPayload::fixed(tokens)?;
    let fallback = |mut p: TokenPayload, why: &str| {
        log::debug!("text coding fell back to fixed-width ids: {why}");
        p.fell_back = true;
        p
    };

    let text = match tokenizer.render(tokens.ids()) {
        Ok(t) => t,
        Err(e) => return Ok(fallback(fixed, &e.to_string())),
    };
    match tokenizer.tokenize(&text) {
        Ok(ids) if ids == tokens.ids() => {}
        Ok(_) => return Ok(fallback(fixed, "re-tokenization changed the ids")),
        Err(e) => return Ok(fallback(fixed, &e.to_string())),
    }

    let bytes = deflate(text.as_bytes());
    if bytes.len() > fixed.bytes.len() + TEXT_REGRET_BYTES {
        fixed.fell_back = true;
        log::debug!(
            "text coding fell back: {} bytes vs {} fixed-width",
            bytes.len(),
            fixed.bytes.len()
        );
        return Ok(fixed);
    }
    Ok(TokenPayload {
        coding: TokenCoding::Text,
        bit_count: bytes.len() * 8,
        bytes,
        fell_back: false,
    })
}

/// Inflates a text-mode payload back to the prompt string.
pub fn decode_text(bytes: &[u8]) -> Result<String> {
    let mut text = String::new();
    DeflateDecoder::new(bytes)
        .read_to_string(&mut text)
        .map_err(|e| Error::Format(format!("text payload: {e}")))?;
    Ok(text)
}

/// Decodes either coding mode to the token sequence.
pub fn decode_tokens(
    coding: TokenCoding,
    bytes: &[u8],
    prompt_length: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<TokenSequence> {
    let vocab = tokenizer.vocab_size() as u32;
    match coding {
        TokenCoding::FixedWidth => decode_tokens_fixed(bytes, prompt_length, vocab),
        TokenCoding::Text => {
            let ids = tokenizer.tokenize(&decode_text(bytes)?)?;
            let tokens = TokenSequence::new(ids, vocab)?;
            tokens.expect_len(prompt_length)?;
            Ok(tokens)
        }
    }
}

/// Decodes a payload to the prompt text handed to the image generator.
pub fn decode_prompt_text(
    coding: TokenCoding,
    bytes: &[u8],
    prompt_length: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<String> {
    match coding {
        TokenCoding::Text => decode_text(bytes),
        TokenCoding::FixedWidth => {
            let tokens = decode_tokens_fixed(bytes, prompt_length, tokenizer.vocab_size() as u32)?;
            tokenizer.render(tokens.ids())
        }
    }
}

fn deflate(data: &[u8]) -> Vec<u8> {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}
