//! Tokenizer contracts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Anything that can count tokens in a string.
pub trait TokenCounter: Send + Sync {
    fn count_tokens(&self, text: &str) -> usize;
}

/// A reversible tokenizer over a fixed vocabulary.
pub trait Tokenizer: Send + Sync {
    fn encode(&self, text: &str) -> Vec<u32>;
    fn decode(&self, ids: &[u32]) -> String;
    fn vocab_size(&self) -> usize;
}

/// Whitespace-delimited token counting.
#[derive(Debug, Clone, Copy, Default)]
pub struct Whitespace;

impl TokenCounter for Whitespace {
    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

pub const UNK: &str = "<unk>";

/// Word-level vocabulary tokenizer. Id 0 is `<unk>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordLevel {
    vocab: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl WordLevel {
    pub fn from_vocab(words: impl IntoIterator<Item = String>) -> Self {
        let mut vocab = vec![UNK.to_string()];
        let mut index = HashMap::new();
        index.insert(UNK.to_string(), 0);
        for w in words {
            if !index.contains_key(&w) {
                index.insert(w.clone(), vocab.len() as u32);
                vocab.push(w);
            }
        }
        WordLevel { vocab, index }
    }

    /// Build a vocabulary from texts, most frequent first, ties by string.
    pub fn train<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in texts {
            for w in t.split_whitespace() {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(&str, u64)> = counts.into_iter().collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Self::from_vocab(
            words
                .into_iter()
                .take(max_size.saturating_sub(1))
                .map(|(w, _)| w.to_string()),
        )
    }

    pub fn token(&self, id: u32) -> &str {
        self.vocab.get(id as usize).map_or(UNK, String::as_str)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        let mut t: WordLevel = serde_json::from_str(json)?;
        t.rebuild_index();
        Ok(t)
    }
}

impl Tokenizer for WordLevel {
    fn encode(&self, text: &str) -> Vec<u32> {
        text.split_whitespace()
            .map(|w| self.index.get(w).copied().unwrap_or(0))
            .collect()
    }

    fn decode(&self, ids: &[u32]) -> String {
        ids.iter().map(|&i| self.token(i)).collect::<Vec<_>>().join(" ")
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
}

impl TokenCounter for WordLevel {
    fn count_tokens(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_counts() {
        assert_eq!(Whitespace.count_tokens(" a  b\tc\n"), 3);
        assert_eq!(Whitespace.count_tokens(""), 0);
    }

    #[test]
    fn word_level_round_trip() {
        let t = WordLevel::train(["b a b", "c b a"], 10);
        assert_eq!(t.vocab_size(), 4);
        assert_eq!(t.token(1), "b");
        let ids = t.encode("a b c zz");
        assert_eq!(ids, vec![2, 1, 3, 0]);
        assert_eq!(t.decode(&ids), "a b c <unk>");
        let json = serde_json::to_string(&t).unwrap();
        let back = WordLevel::from_json(&json).unwrap();
        assert_eq!(back.encode("a b c"), vec![2, 1, 3]);
    }

    #[test]
    fn train_caps_size() {
        let t = WordLevel::train(["a b c d e"], 3);
        assert_eq!(t.vocab_size(), 3);
    }
}
