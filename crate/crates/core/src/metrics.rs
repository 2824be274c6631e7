//! Text metrics: chrF, Levenshtein similarity, n-grams, token overlap and
//! script composition.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_script::{Script, UnicodeScript};

use crate::error::{Error, Result};
use crate::lang::{LangCode, LangTables};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfParams {
    pub max_char_order: usize,
    pub word_order: usize,
    pub beta: f64,
    pub effective_order: bool,
    pub strip_whitespace: bool,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams {
            max_char_order: 6,
            word_order: 0,
            beta: 2.0,
            effective_order: true,
            strip_whitespace: true,
        }
    }
}

fn counts<T: Hash + Eq + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if n == 0 || items.len() < n {
        return m;
    }
    for w in items.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// (hypothesis n-grams, reference n-grams, matches) for one order.
fn order_stats<T: Hash + Eq + Clone>(hyp: &[T], refr: &[T], n: usize) -> (usize, usize, usize) {
    let h = counts(hyp, n);
    let r = counts(refr, n);
    let matches = h
        .iter()
        .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (h.values().sum(), r.values().sum(), matches)
}

/// Sentence-level chrF on a 0-100 scale.
pub fn chrf(hypothesis: &str, reference: &str, p: &ChrfParams) -> f64 {
    let prep = |s: &str| -> Vec<char> {
        if p.strip_whitespace {
            s.split_whitespace().flat_map(str::chars).collect()
        } else {
            s.chars().collect()
        }
    };
    let hyp = prep(hypothesis);
    let refr = prep(reference);
    match (hyp.is_empty(), refr.is_empty()) {
        (true, true) => return 100.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }

    let mut stats = Vec::with_capacity(p.max_char_order + p.word_order);
    for n in 1..=p.max_char_order {
        stats.push(order_stats(&hyp, &refr, n));
    }
    if p.word_order > 0 {
        let hw: Vec<&str> = hypothesis.split_whitespace().collect();
        let rw: Vec<&str> = reference.split_whitespace().collect();
        for n in 1..=p.word_order {
            stats.push(order_stats(&hw, &rw, n));
        }
    }

    let (mut prec, mut rec, mut orders) = (0.0, 0.0, 0usize);
    for &(n_hyp, n_ref, n_match) in &stats {
        if n_hyp > 0 && n_ref > 0 {
            prec += n_match as f64 / n_hyp as f64;
            rec += n_match as f64 / n_ref as f64;
            orders += 1;
        }
    }
    if !p.effective_order {
        orders = stats.len();
    }
    if orders == 0 {
        return 0.0;
    }
    prec /= orders as f64;
    rec /= orders as f64;
    if prec + rec == 0.0 {
        return 0.0;
    }
    let b2 = p.beta * p.beta;
    100.0 * (1.0 + b2) * prec * rec / (b2 * prec + rec)
}

pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// 1 - distance / max length; two empty sequences are identical.
pub fn levenshtein_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let max = a.len().max(b.len());
    if max == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / max as f64
}

pub fn levenshtein_similarity_str(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_similarity(&a, &b)
}

/// All contiguous windows of length `n`, in order (a multiset).
pub fn ngrams<T>(tokens: &[T], n: i64) -> Result<Vec<&[T]>> {
    if n <= 0 {
        return Err(Error::InvalidParameter(format!("n-gram order must be positive, got {n}")));
    }
    let n = n as usize;
    if tokens.len() < n {
        return Ok(Vec::new());
    }
    Ok(tokens.windows(n).collect())
}

/// Multiset intersection size over the longer side's length.
pub fn token_overlap<T: Hash + Eq>(src: &[T], tgt: &[T]) -> f64 {
    let max = src.len().max(tgt.len());
    if max == 0 {
        return 0.0;
    }
    let mut bag: HashMap<&T, usize> = HashMap::new();
    for t in src {
        *bag.entry(t).or_insert(0) += 1;
    }
    let mut shared = 0;
    for t in tgt {
        if let Some(c) = bag.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared as f64 / max as f64
}

pub fn is_letter(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter
            | GeneralCategory::LowercaseLetter
            | GeneralCategory::TitlecaseLetter
            | GeneralCategory::ModifierLetter
            | GeneralCategory::OtherLetter
    )
}

/// Letter counts per Unicode script.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScriptProfile {
    pub letters: usize,
    pub counts: BTreeMap<String, usize>,
    pub dominant_script: Option<String>,
}

impl ScriptProfile {
    pub fn fraction(&self, script: Script) -> f64 {
        if self.letters == 0 {
            return 0.0;
        }
        self.counts.get(script.full_name()).copied().unwrap_or(0) as f64 / self.letters as f64
    }

    pub fn fractions(&self) -> BTreeMap<String, f64> {
        self.counts
            .iter()
            .map(|(k, v)| (k.clone(), *v as f64 / self.letters as f64))
            .collect()
    }

    /// Share of letters written in any of `scripts`.
    pub fn in_scripts(&self, scripts: &[Script]) -> f64 {
        let mut seen = Vec::new();
        let mut total = 0.0;
        for s in scripts {
            if !seen.contains(s) {
                seen.push(*s);
                total += self.fraction(*s);
            }
        }
        total
    }

    /// Share of letters in the expected script(s) of `lang`; `None` when the
    /// language has no script entry.
    pub fn in_script(&self, lang: &LangCode, tables: &LangTables) -> Option<f64> {
        tables.expected_scripts(lang).map(|s| self.in_scripts(&s))
    }
}

pub fn script_profile(text: &str) -> ScriptProfile {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut letters = 0;
    for c in text.chars().filter(|c| is_letter(*c)) {
        letters += 1;
        *counts.entry(c.script().full_name().to_string()).or_insert(0) += 1;
    }
    let dominant_script = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(k, _)| k.clone());
    ScriptProfile {
        letters,
        counts,
        dominant_script,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::normalize_lang_code;

    #[test]
    fn chrf_edges() {
        let p = ChrfParams::default();
        assert_eq!(chrf("abc", "abc", &p), 100.0);
        assert_eq!(chrf("abc", "xyz", &p), 0.0);
        assert_eq!(chrf("", "", &p), 100.0);
        assert_eq!(chrf("", "a", &p), 0.0);
        assert_eq!(chrf("a b", "ab", &p), 100.0);
    }

    #[test]
    fn chrf_hand_value() {
        // "ab" vs "ac": order 1 p=r=1/2, order 2 p=r=0 -> avg 1/4.
        let s = chrf("ab", "ac", &ChrfParams::default());
        assert!((s - 25.0).abs() < 1e-12);
    }

    #[test]
    fn levenshtein() {
        assert_eq!(levenshtein_similarity_str("abc", "abc"), 1.0);
        assert!((levenshtein_similarity_str("abc", "axc") - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(levenshtein_similarity_str("", "abc"), 0.0);
        assert_eq!(levenshtein_similarity_str("", ""), 1.0);
        assert_eq!(edit_distance(b"kitten", b"sitting"), 3);
    }

    #[test]
    fn ngram_windows() {
        let t = ["a", "b", "c"];
        assert_eq!(ngrams(&t, 2).unwrap(), vec![&t[0..2], &t[1..3]]);
        assert!(ngrams(&t[..2], 8).unwrap().is_empty());
        assert!(ngrams(&t, 0).is_err());
        assert!(ngrams(&t, -1).is_err());
        let thirty: Vec<u32> = (0..30).collect();
        assert_eq!(ngrams(&thirty, 8).unwrap().len(), 23);
    }

    #[test]
    fn overlap() {
        let a = ["a", "b", "c", "d"];
        let b = ["a", "b", "x", "y"];
        assert_eq!(token_overlap(&a, &b), 0.5);
        assert_eq!(token_overlap(&a, &a), 1.0);
        let e: [&str; 0] = [];
        assert_eq!(token_overlap(&e, &e), 0.0);
    }

    #[test]
    fn profiles() {
        let p = script_profile("привет");
        assert_eq!(p.fraction(Script::Cyrillic), 1.0);
        let p = script_profile("abcdefg жзи");
        assert!((p.fraction(Script::Latin) - 0.7).abs() < 1e-12);
        assert_eq!(p.dominant_script.as_deref(), Some("Latin"));
        let p = script_profile("123 !!");
        let t = LangTables::global();
        assert_eq!(p.in_script(&normalize_lang_code("en").unwrap(), t), Some(0.0));
        let ja = script_profile("ひらがなカタカナ漢字");
        assert_eq!(ja.in_script(&normalize_lang_code("ja").unwrap(), t), Some(1.0));
    }
}
