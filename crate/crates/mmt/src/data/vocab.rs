//! Token/id mapping with reserved control tokens.

use std::collections::HashMap;

use crate::data::fnv1a;

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;

const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Bijection between tokens and dense ids; ids 0..3 are fixed control
/// tokens and are never reassigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Collect the vocabulary of a tokenized corpus in first-occurrence
    /// order after the reserved entries.
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a Vec<String>>) -> Vocabulary {
        let mut v = Vocabulary::empty();
        for sent in sentences {
            for tok in sent {
                v.intern(tok);
            }
        }
        v
    }

    pub fn empty() -> Vocabulary {
        let tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index }
    }

    /// From a plain token list (checkpoint restore). The reserved prefix
    /// must be intact.
    pub fn from_tokens(tokens: Vec<String>) -> crate::error::Result<Vocabulary> {
        if tokens.len() < 4 || tokens[..4] != RESERVED.map(String::from) {
            return Err(crate::error::Error::Data(
                "vocabulary missing reserved prefix".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(crate::error::Error::Data(format!(
                    "duplicate vocabulary token `{t}`"
                )));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    fn intern(&mut self, tok: &str) -> u32 {
        if let Some(&id) = self.index.get(tok) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(tok.to_string());
        self.index.insert(tok.to_string(), id);
        id
    }

    /// Id of a token; unknown tokens map to UNK.
    pub fn id(&self, tok: &str) -> u32 {
        self.index.get(tok).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved entries are always present
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, sent: &[String]) -> Vec<u32> {
        sent.iter().map(|t| self.id(t)).collect()
    }

    /// Ids back to tokens, dropping PAD/BOS/EOS (UNK stays visible).
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&id| id != PAD && id != BOS && id != EOS)
            .map(|&id| self.token(id).to_string())
            .collect()
    }

    pub fn hash(&self) -> u64 {
        let mut joined = String::new();
        for t in &self.tokens {
            joined.push_str(t);
            joined.push('\n');
        }
        fnv1a(joined.as_bytes())
    }
}
