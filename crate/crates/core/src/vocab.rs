//! Token vocabulary and sequences.
//!
//! The vocabulary is a small, fixed, ordered table of symbol strings. Four
//! structural tag tokens, an end-of-sequence marker, an unknown-word marker,
//! option letters A–E, and the ten digits are always present; the remainder
//! are plain word tokens. Tokenization is greedy longest-match per
//! whitespace-delimited word, with whole words that cannot be segmented
//! mapping to the unknown token.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::fnv1a;

pub type TokenId = u32;

pub const TAG_THINK_OPEN: &str = "<think>";
pub const TAG_THINK_CLOSE: &str = "</think>";
pub const TAG_ANSWER_OPEN: &str = "<answer>";
pub const TAG_ANSWER_CLOSE: &str = "</answer>";
pub const TOKEN_EOS: &str = "<eos>";
pub const TOKEN_UNK: &str = "<unk>";

/// A token sequence plus whether generation ended with the EOS token
/// (`terminated = false` means the length cap cut it off).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<TokenId>,
    pub terminated: bool,
}

impl TokenSeq {
    pub fn new(tokens: Vec<TokenId>) -> Self {
        Self {
            tokens,
            terminated: false,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Ordered table of distinct tokens with the structural markers required by
/// the reward machinery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
    #[serde(skip)]
    max_token_chars: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from an ordered token list.
    ///
    /// Rejects duplicate tokens, missing structural markers (tags, EOS, UNK,
    /// option letters A–E, digits), and sizes outside 16..=512.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 16 || tokens.len() > 512 {
            return Err(Error::Config(format!(
                "vocabulary size {} outside 16..=512",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Config(format!("duplicate token {t:?}")));
            }
        }
        let mut required: Vec<String> = [
            TAG_THINK_OPEN,
            TAG_THINK_CLOSE,
            TAG_ANSWER_OPEN,
            TAG_ANSWER_CLOSE,
            TOKEN_EOS,
            TOKEN_UNK,
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        required.extend(('A'..='E').map(|c| c.to_string()));
        required.extend(('0'..='9').map(|c| c.to_string()));
        for r in &required {
            if !index.contains_key(r) {
                return Err(Error::Config(format!("missing required token {r:?}")));
            }
        }
        let max_token_chars = tokens.iter().map(|t| t.chars().count()).max().unwrap_or(0);
        Ok(Self {
            tokens,
            index,
            max_token_chars,
        })
    }

    /// The fixed desk-scale vocabulary covering the synthetic task families.
    pub fn standard() -> Self {
        let mut toks: Vec<String> = vec![
            TAG_THINK_OPEN.into(),
            TAG_THINK_CLOSE.into(),
            TAG_ANSWER_OPEN.into(),
            TAG_ANSWER_CLOSE.into(),
            TOKEN_EOS.into(),
            TOKEN_UNK.into(),
        ];
        toks.extend(('A'..='E').map(|c| c.to_string()));
        toks.extend(('0'..='9').map(|c| c.to_string()));
        toks.extend([".", "?", ",", ":"].into_iter().map(String::from));
        toks.extend(
            [
                "alarm", "applies", "asks", "board", "code", "consider", "desk", "drift", "for",
                "from", "gauges", "guidance", "is", "largest", "list", "lists", "note",
                "ordering", "panel", "protocol", "reading", "readings", "reports", "review",
                "see", "shows", "smallest", "sounded", "the", "to", "values", "which", "you",
            ]
            .into_iter()
            .map(String::from),
        );
        Self::new(toks).expect("standard vocabulary is valid")
    }

    /// Rebuilds the derived lookup tables after deserialization.
    pub fn rehydrate(mut self) -> Result<Self> {
        let tokens = std::mem::take(&mut self.tokens);
        Self::new(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_str(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn lookup(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn id_of(&self, token: &str) -> TokenId {
        self.index[token]
    }

    pub fn eos(&self) -> TokenId {
        self.id_of(TOKEN_EOS)
    }

    pub fn unk(&self) -> TokenId {
        self.id_of(TOKEN_UNK)
    }

    pub fn think_open(&self) -> TokenId {
        self.id_of(TAG_THINK_OPEN)
    }

    pub fn think_close(&self) -> TokenId {
        self.id_of(TAG_THINK_CLOSE)
    }

    pub fn answer_open(&self) -> TokenId {
        self.id_of(TAG_ANSWER_OPEN)
    }

    pub fn answer_close(&self) -> TokenId {
        self.id_of(TAG_ANSWER_CLOSE)
    }

    /// Stable content hash; checkpoints store it to reject mismatched loads.
    pub fn content_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        for t in &self.tokens {
            bytes.extend_from_slice(t.as_bytes());
            bytes.push(0x1f);
        }
        fnv1a(&bytes)
    }

    /// Greedy longest-match tokenization.
    ///
    /// Each whitespace-delimited word is segmented left to right, always
    /// taking the longest vocabulary token that prefixes the remainder. A
    /// word that cannot be fully segmented becomes a single UNK.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            match self.segment_word(word) {
                Some(ids) => out.extend(ids),
                None => out.push(self.unk()),
            }
        }
        out
    }

    fn segment_word(&self, word: &str) -> Option<Vec<TokenId>> {
        if let Some(id) = self.lookup(word) {
            return Some(vec![id]);
        }
        let chars: Vec<char> = word.chars().collect();
        let mut ids = Vec::new();
        let mut pos = 0;
        while pos < chars.len() {
            let mut matched = None;
            let upper = self.max_token_chars.min(chars.len() - pos);
            for len in (1..=upper).rev() {
                let cand: String = chars[pos..pos + len].iter().collect();
                if let Some(id) = self.lookup(&cand) {
                    matched = Some((id, len));
                    break;
                }
            }
            match matched {
                Some((id, len)) => {
                    ids.push(id);
                    pos += len;
                }
                None => return None,
            }
        }
        Some(ids)
    }

    /// Inverse of [`tokenize`](Self::tokenize) up to whitespace
    /// normalization: tokens joined by single spaces, EOS dropped.
    pub fn detokenize(&self, tokens: &[TokenId]) -> String {
        let eos = self.eos();
        let mut out = String::new();
        for &t in tokens.iter().filter(|&&t| t != eos) {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(self.token_str(t));
        }
        out
    }
}

/// Collapses all whitespace runs to single spaces and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_vocab_is_valid_and_sized() {
        let v = Vocabulary::standard();
        assert!(v.len() >= 16 && v.len() <= 512);
        assert_eq!(v.token_str(v.think_open()), TAG_THINK_OPEN);
        assert_eq!(v.token_str(v.eos()), TOKEN_EOS);
    }

    #[test]
    fn rejects_duplicates_and_missing_markers() {
        let mut toks: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
        assert!(Vocabulary::new(toks.clone()).is_err());
        toks.push("t0".into());
        assert!(Vocabulary::new(toks).is_err());
    }

    #[test]
    fn rejects_out_of_range_sizes() {
        let toks: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
        assert!(matches!(Vocabulary::new(toks), Err(Error::Config(_))));
    }

    #[test]
    fn tokenize_known_words_round_trips() {
        let v = Vocabulary::standard();
        let text = "which reading is the largest ? A 3 B 9";
        let ids = v.tokenize(text);
        assert_eq!(v.detokenize(&ids), text);
    }

    #[test]
    fn unknown_word_maps_to_unk() {
        let v = Vocabulary::standard();
        let ids = v.tokenize("zzzqqq readings");
        assert_eq!(ids[0], v.unk());
        assert_eq!(v.token_str(ids[1]), "readings");
    }

    #[test]
    fn greedy_segmentation_splits_compounds() {
        let v = Vocabulary::standard();
        // "(C)." is not a word token but splits into nothing known; "3?" splits
        // into digit + question mark.
        let ids = v.tokenize("3?");
        assert_eq!(ids.len(), 2);
        assert_eq!(v.token_str(ids[0]), "3");
        assert_eq!(v.token_str(ids[1]), "?");
    }

    #[test]
    fn detokenize_skips_eos() {
        let v = Vocabulary::standard();
        let ids = vec![v.id_of("9"), v.eos()];
        assert_eq!(v.detokenize(&ids), "9");
    }

    #[test]
    fn content_hash_is_order_sensitive() {
        let v = Vocabulary::standard();
        let mut toks: Vec<String> = (0..v.len()).map(|i| v.token_str(i as u32).into()).collect();
        toks.swap(20, 21);
        let v2 = Vocabulary::new(toks).unwrap();
        assert_ne!(v.content_hash(), v2.content_hash());
    }
}
