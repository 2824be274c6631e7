//! Monolingual page filters and the questionable-sentence scorer.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sentence};
use crate::error::{Error, Result};
use crate::lang::LangCode;
use crate::report::{FilterReport, Outcome};

const CURSED_PATTERNS: &str = include_str!("../data/cursed_patterns.txt");

/// Line identity for deduplication.
fn line_key(line: &str) -> &str {
    line.trim_end()
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Cross-document line deduplication: the first occurrence of each line in
/// stream order survives. Blank lines are left alone. Documents that end up
/// with no content are dropped.
pub fn dedup_lines(docs: Vec<Document>) -> (Vec<Document>, FilterReport) {
    dedup_lines_sharded(docs, 1)
}

/// Same result as [`dedup_lines`], computed in two phases over `shards`
/// contiguous chunks: each chunk reports the first position of every line key
/// into hash partitions, partitions are reduced to the global first position,
/// then each chunk keeps only lines sitting at that position.
pub fn dedup_lines_sharded(docs: Vec<Document>, shards: usize) -> (Vec<Document>, FilterReport) {
    let shards = shards.max(1);
    let chunk = docs.len().div_ceil(shards).max(1);
    type Pos = (usize, usize);

    let partition_of = |key: &str| -> usize {
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        (h.finish() % shards as u64) as usize
    };

    let firsts: Vec<Vec<HashMap<&str, Pos>>> = docs
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, slice)| {
            let mut parts: Vec<HashMap<&str, Pos>> = vec![HashMap::new(); shards];
            for (k, doc) in slice.iter().enumerate() {
                let d = c * chunk + k;
                for (j, line) in doc.lines.iter().enumerate() {
                    if is_blank(line) {
                        continue;
                    }
                    let key = line_key(line);
                    parts[partition_of(key)].entry(key).or_insert((d, j));
                }
            }
            parts
        })
        .collect();

    let merged: Vec<HashMap<&str, Pos>> = (0..shards)
        .into_par_iter()
        .map(|p| {
            let mut m: HashMap<&str, Pos> = HashMap::new();
            for shard in &firsts {
                for (k, pos) in &shard[p] {
                    m.entry(k)
                        .and_modify(|cur| {
                            if *pos < *cur {
                                *cur = *pos
                            }
                        })
                        .or_insert(*pos);
                }
            }
            m
        })
        .collect();

    let kept: Vec<Vec<Vec<usize>>> = docs
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, slice)| {
            slice
                .iter()
                .enumerate()
                .map(|(k, doc)| {
                    let d = c * chunk + k;
                    doc
                        .lines
                        .iter()
                        .enumerate()
                        .filter(|(j, line)| {
                            if is_blank(line) {
                                return true;
                            }
                            let key = line_key(line);
                            merged[partition_of(key)].get(key) == Some(&(d, *j))
                        })
                        .map(|(j, _)| j)
                        .collect()
                })
                .collect()
        })
        .collect();
    drop(merged);
    drop(firsts);

    let mut report = FilterReport::new("dedup_lines");
    let mut out = Vec::with_capacity(docs.len());
    for (mut doc, keep) in docs.into_iter().zip(kept.into_iter().flatten()) {
        if keep.len() != doc.lines.len() {
            let lines = std::mem::take(&mut doc.lines);
            doc.lines = keep.into_iter().map(|j| lines[j].clone()).collect();
        }
        if doc.is_empty() {
            report.reject("all_lines_duplicate");
        } else {
            report.keep();
            out.push(doc);
        }
    }
    (out, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrelimParams {
    pub min_long_lines: usize,
    pub long_line_chars: usize,
}

impl Default for PrelimParams {
    fn default() -> Self {
        PrelimParams {
            min_long_lines: 3,
            long_line_chars: 200,
        }
    }
}

/// Remove "Javascript" lines, then keep the page only if it has enough long
/// lines and no placeholder text or curly brackets.
pub fn prelim_page_filter(mut doc: Document, p: &PrelimParams) -> (Document, Outcome) {
    doc.lines.retain(|l| !l.contains("Javascript"));
    let outcome = if doc.lines.iter().any(|l| l.to_lowercase().contains("lorem ipsum")) {
        Outcome::Drop("lorem_ipsum")
    } else if doc.lines.iter().any(|l| l.contains('{')) {
        Outcome::Drop("curly_bracket")
    } else if doc
        .lines
        .iter()
        .filter(|l| l.chars().count() >= p.long_line_chars)
        .count()
        < p.min_long_lines
    {
        Outcome::Drop("too_few_long_lines")
    } else {
        Outcome::Keep
    };
    (doc, outcome)
}

#[derive(Debug, Clone)]
enum Pattern {
    Substring(String),
    Regex(Regex),
}

/// Boilerplate / porn / garbage patterns.
#[derive(Debug, Clone)]
pub struct CursedPatterns {
    patterns: Vec<Pattern>,
}

impl CursedPatterns {
    pub fn parse(text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, pat) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("cursed patterns line {}: missing tab", i + 1)))?;
            if pat.is_empty() {
                return Err(Error::Data(format!("cursed patterns line {}: empty pattern", i + 1)));
            }
            patterns.push(match kind {
                "sub" => Pattern::Substring(pat.to_string()),
                "re" => Pattern::Regex(
                    Regex::new(pat).map_err(|e| Error::Data(format!("cursed patterns line {}: {e}", i + 1)))?,
                ),
                other => return Err(Error::Data(format!("cursed patterns line {}: unknown kind {other:?}", i + 1))),
            });
        }
        Ok(CursedPatterns { patterns })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn regex_count(&self) -> usize {
        self.patterns.iter().filter(|p| matches!(p, Pattern::Regex(_))).count()
    }

    pub fn matches(&self, text: &str) -> bool {
        self.patterns.iter().any(|p| match p {
            Pattern::Substring(s) => text.contains(s.as_str()),
            Pattern::Regex(r) => r.is_match(text),
        })
    }
}

impl Default for CursedPatterns {
    fn default() -> Self {
        Self::parse(CURSED_PATTERNS).expect("bundled cursed patterns")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionableFlags {
    pub doc_mismatch: bool,
    pub list_case: bool,
    pub abnormal_length: bool,
    pub technical_chars: bool,
    pub cursed: bool,
}

impl QuestionableFlags {
    pub const NAMES: [&'static str; 5] =
        ["doc_mismatch", "list_case", "abnormal_length", "technical_chars", "cursed"];

    fn as_array(&self) -> [bool; 5] {
        [self.doc_mismatch, self.list_case, self.abnormal_length, self.technical_chars, self.cursed]
    }

    pub fn any(&self) -> bool {
        self.as_array().iter().any(|b| *b)
    }

    /// Bit i set for flag i in [`Self::NAMES`] order.
    pub fn bits(&self) -> u32 {
        self.as_array()
            .iter()
            .enumerate()
            .fold(0, |acc, (i, b)| acc | (u32::from(*b) << i))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        let arr = self.as_array();
        Self::NAMES.into_iter().zip(arr).filter(|(_, b)| *b).map(|(n, _)| n)
    }

    /// First set flag in documented order.
    pub fn primary(&self) -> Option<&'static str> {
        self.names().next()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams {
    pub list_case_min_tokens: usize,
    pub list_case_ratio: f64,
    pub min_chars: usize,
    pub max_chars: usize,
    pub technical_ratio: f64,
}

impl Default for ScorerParams {
    fn default() -> Self {
        ScorerParams {
            list_case_min_tokens: 12,
            list_case_ratio: 0.5,
            min_chars: 20,
            max_chars: 500,
            technical_ratio: 0.2,
        }
    }
}

fn is_technical(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '{' | '}' | '+' | '/' | '(' | ')' | '>')
}

#[derive(Debug, Clone, Default)]
pub struct QuestionableScorer {
    pub params: ScorerParams,
    pub cursed: CursedPatterns,
}

impl QuestionableScorer {
    pub fn new(params: ScorerParams, cursed: CursedPatterns) -> Self {
        QuestionableScorer { params, cursed }
    }

    pub fn flag_sentence(&self, sent: &Sentence, doc_lang: &LangCode) -> QuestionableFlags {
        self.flag_text(&sent.text, sent.predicted_lang.as_ref(), doc_lang)
    }

    pub fn flag_text(&self, text: &str, predicted: Option<&LangCode>, doc_lang: &LangCode) -> QuestionableFlags {
        let p = &self.params;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let capitalized = tokens
            .iter()
            .filter(|t| t.chars().next().is_some_and(char::is_uppercase))
            .count();
        let chars = text.chars().count();
        let technical = text.chars().filter(|c| is_technical(*c)).count();
        QuestionableFlags {
            doc_mismatch: predicted.is_some_and(|l| l.code != doc_lang.code),
            list_case: tokens.len() >= p.list_case_min_tokens
                && capitalized as f64 > p.list_case_ratio * tokens.len() as f64,
            abnormal_length: chars < p.min_chars || chars > p.max_chars,
            technical_chars: chars > 0 && technical as f64 > p.technical_ratio * chars as f64,
            cursed: self.cursed.matches(text),
        }
    }

    /// Flag every sentence of `doc` in place.
    pub fn annotate(&self, doc: &mut Document) {
        let lang = doc.lang.clone();
        for s in &mut doc.sentences {
            let flags = self.flag_sentence(s, &lang);
            s.flags = flags.names().map(str::to_string).collect();
        }
    }
}

/// Fraction of sentences carrying at least one flag.
pub fn pct_questionable(doc: &Document) -> Result<f64> {
    if doc.sentences.is_empty() {
        return Err(Error::UndefinedScore);
    }
    let flagged = doc.sentences.iter().filter(|s| !s.flags.is_empty()).count();
    Ok(flagged as f64 / doc.sentences.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub max_questionable: f64,
    pub min_sentences: usize,
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            max_questionable: 0.20,
            min_sentences: 5,
        }
    }
}

/// Drop documents with too few sentences or too many questionable ones.
pub fn clean_gate(doc: &Document, p: &GateParams) -> Outcome {
    if doc.sentences.len() < p.min_sentences {
        return Outcome::Drop("too_few_sentences");
    }
    match pct_questionable(doc) {
        Ok(score) if score > p.max_questionable => Outcome::Drop("questionable"),
        Ok(_) => Outcome::Keep,
        Err(_) => Outcome::Drop("too_few_sentences"),
    }
}
