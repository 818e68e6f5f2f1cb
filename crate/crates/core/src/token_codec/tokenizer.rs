use std::collections::HashMap;

use crate::error::{Error, Result};

/// Converts between token ids and text.
pub trait Tokenizer: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn render(&self, ids: &[u32]) -> Result<String>;

    fn tokenize(&self, text: &str) -> Result<Vec<u32>>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Piece {
    text: String,
    /// Word-final pieces are rendered with a trailing space.
    word_end: bool,
}

/// Word-piece vocabulary with greedy longest-match tokenization.
///
/// Like byte-pair vocabularies, a non-final piece followed by a final piece
/// can render to a string that tokenizes differently, so `render` followed
/// by `tokenize` is not always the identity.
#[derive(Debug, Clone)]
pub struct WordPieceVocab {
    pieces: Vec<Piece>,
    index: HashMap<(String, bool), u32>,
    longest: usize,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

impl WordPieceVocab {
    pub fn new(pieces: Vec<(String, bool)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pieces.len());
        for (id, (text, word_end)) in pieces.iter().enumerate() {
            if text.is_empty() || text.chars().any(char::is_whitespace) {
                return Err(Error::Argument(format!("invalid piece {text:?}")));
            }
            if index.insert((text.clone(), *word_end), id as u32).is_some() {
                return Err(Error::Argument(format!("duplicate piece {text:?}")));
            }
        }
        let longest = pieces.iter().map(|(t, _)| t.len()).max().unwrap_or(0);
        Ok(Self {
            pieces: pieces
                .into_iter()
                .map(|(text, word_end)| Piece { text, word_end })
                .collect(),
            index,
            longest,
        })
    }

    /// Deterministic syllable vocabulary; every fourth entry is a word-internal piece.
    pub fn synthetic(vocab_size: usize) -> Self {
        let syllables: Vec<String> = CONSONANTS
            .iter()
            .flat_map(|&c| {
                VOWELS
                    .iter()
                    .map(move |&v| format!("{}{}", c as char, v as char))
            })
            .collect();
        let base = syllables.len();
        let pieces = (0..vocab_size)
            .map(|id| {
                // bijective base-n numbering keeps every word distinct
                let mut k = id + 1;
                let mut word = String::new();
                while k > 0 {
                    k -= 1;
                    word.insert_str(0, &syllables[k % base]);
                    k /= base;
                }
                (word, id % 4 != 3)
            })
            .collect();
        Self::new(pieces).expect("synthetic pieces are unique")
    }

    pub fn piece(&self, id: u32) -> Option<(&str, bool)> {
        self.pieces
            .get(id as usize)
            .map(|p| (p.text.as_str(), p.word_end))
    }

    fn tokenize_word(&self, word: &str, out: &mut Vec<u32>) -> Result<()> {
        let mut pos = 0;
        while pos < word.len() {
            let rest = &word[pos..];
            let max = rest.len().min(self.longest);
            let mut found = None;
            for len in (1..=max).rev() {
                if !rest.is_char_boundary(len) {
                    continue;
                }
                let cand = &rest[..len];
                let at_end = len == rest.len();
                if let Some(&id) = self.index.get(&(cand.to_string(), at_end)) {
                    found = Some((id, len));
                    break;
                }
            }
            match found {
                Some((id, len)) => {
                    out.push(id);
                    pos += len;
                }
                None => {
                    return Err(Error::Format(format!("cannot tokenize {rest:?}")));
                }
            }
        }
        Ok(())
    }
}

impl Tokenizer for WordPieceVocab {
    fn vocab_size(&self) -> usize {
        self.pieces.len()
    }

    fn render(&self, ids: &[u32]) -> Result<String> {
        let mut text = String::new();
        for &id in ids {
            let p = self
                .pieces
                .get(id as usize)
                .ok_or_else(|| Error::Range(format!("id {id} outside vocabulary")))?;
            text.push_str(&p.text);
            if p.word_end {
                text.push(' ');
            }
        }
        Ok(text.trim_end().to_string())
    }

    fn tokenize(&self, text: &str) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            self.tokenize_word(word, &mut out)?;
        }
        Ok(out)
    }
}
