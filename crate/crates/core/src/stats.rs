//! Corpus statistics: totals and per-language medians.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_line, Document};
use crate::tokenize::TokenCounter;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LangCounts {
    pub documents: u64,
    pub sentences: u64,
    pub tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_documents: u64,
    pub n_sentences: u64,
    pub n_tokens: u64,
    pub median_documents: f64,
    pub median_sentences: f64,
    pub median_tokens: f64,
    pub per_language: BTreeMap<String, LangCounts>,
}

pub fn median(values: &mut [u64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] as f64 + values[mid] as f64) / 2.0
    }
}

/// Accumulates counts one document at a time.
#[derive(Debug, Default, Clone)]
pub struct StatsAccumulator {
    per_language: BTreeMap<String, LangCounts>,
}

impl StatsAccumulator {
    pub fn add(&mut self, doc: &Document, tokenizer: &dyn TokenCounter) {
        let sentences = if doc.sentences.is_empty() {
            doc.lines.iter().map(|l| split_line(l).len() as u64).sum()
        } else {
            doc.sentences.len() as u64
        };
        let tokens: u64 = doc.lines.iter().map(|l| tokenizer.count_tokens(l) as u64).sum();
        let e = self.per_language.entry(doc.lang.code.clone()).or_default();
        e.documents += 1;
        e.sentences += sentences;
        e.tokens += tokens;
    }

    pub fn finish(self) -> CorpusStats {
        let per = self.per_language;
        let col = |f: fn(&LangCounts) -> u64| -> Vec<u64> { per.values().map(f).collect() };
        CorpusStats {
            n_documents: col(|c| c.documents).iter().sum(),
            n_sentences: col(|c| c.sentences).iter().sum(),
            n_tokens: col(|c| c.tokens).iter().sum(),
            median_documents: median(&mut col(|c| c.documents)),
            median_sentences: median(&mut col(|c| c.sentences)),
            median_tokens: median(&mut col(|c| c.tokens)),
            per_language: per,
        }
    }
}

pub fn compute_stats<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    tokenizer: &dyn TokenCounter,
) -> CorpusStats {
    let mut acc = StatsAccumulator::default();
    for d in docs {
        acc.add(d, tokenizer);
    }
    acc.finish()
}
