use crate::error::{Error, Result};

/// Default number of tokens in an inverted prompt.
pub const DEFAULT_PROMPT_LENGTH: usize = 16;

/// A hard prompt: indices into the embedder's token codebook.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    ids: Vec<u32>,
    vocab_size: u32,
}

impl TokenSequence {
    pub fn new(ids: Vec<u32>, vocab_size: u32) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::Argument("vocabulary size must be positive".into()));
        }
        if let Some((pos, id)) = ids.iter().enumerate().find(|(_, &id)| id >= vocab_size) {
            return Err(Error::Range(format!(
                "token {pos} has id {id}, vocabulary size is {vocab_size}"
            )));
        }
        Ok(Self { ids, vocab_size })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Fails unless the sequence holds exactly `expected` tokens.
    pub fn expect_len(&self, expected: usize) -> Result<()> {
        if self.ids.len() != expected {
            return Err(Error::Shape(format!(
                "prompt has {} tokens, expected {expected}",
                self.ids.len()
            )));
        }
        Ok(())
    }
}
