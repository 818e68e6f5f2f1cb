use crate::core::TokenSequence;
use crate::error::{Error, Result};

/// Bits per id for a vocabulary of `vocab_size` entries: `ceil(log2 V)`.
pub fn id_width(vocab_size: u32) -> u32 {
    if vocab_size <= 1 {
        0
    } else {
        32 - (vocab_size - 1).leading_zeros()
    }
}

/// Packs ids MSB-first at `id_width` bits each, zero-padding the last byte.
/// Returns the bytes and the number of meaningful bits.
pub fn encode_tokens_fixed(tokens: &TokenSequence) -> Result<(Vec<u8>, usize)> {
    let vocab = tokens.vocab_size();
    let width = id_width(vocab);
    let bit_count = tokens.len() * width as usize;
    let mut out = vec![0u8; bit_count.div_ceil(8)];
    let mut pos = 0usize;
    for &id in tokens.ids() {
        if id >= vocab {
            return Err(Error::Range(format!("id {id} >= vocabulary size {vocab}")));
        }
        for b in (0..width).rev() {
            if (id >> b) & 1 == 1 {
                out[pos / 8] |= 0x80 >> (pos % 8);
            }
            pos += 1;
        }
    }
    Ok((out, bit_count))
}

/// Inverse of [`encode_tokens_fixed`]; padding bits must be zero.
pub fn decode_tokens_fixed(
    bytes: &[u8],
    prompt_length: usize,
    vocab_size: u32,
) -> Result<TokenSequence> {
    let width = id_width(vocab_size) as usize;
    let bit_count = prompt_length * width;
    let needed = bit_count.div_ceil(8);
    if bytes.len() < needed {
        return Err(Error::Truncation {
            needed,
            found: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(Error::Format(format!(
            "token payload has {} bytes, {prompt_length} ids of {width} bits need {needed}",
            bytes.len()
        )));
    }
    let bit = |pos: usize| (bytes[pos / 8] >> (7 - pos % 8)) & 1;
    let mut ids = Vec::with_capacity(prompt_length);
    for t in 0..prompt_length {
        let mut id = 0u32;
        for k in 0..width {
            id = (id << 1) | bit(t * width + k) as u32;
        }
        ids.push(id);
    }
    if (bit_count..needed * 8).any(|pos| bit(pos) != 0) {
        return Err(Error::Format("non-zero padding bits".into()));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= vocab_size) {
        return Err(Error::Format(format!(
            "decoded id {bad} is outside the vocabulary of {vocab_size}"
        )));
    }
    TokenSequence::new(ids, vocab_size)
}
