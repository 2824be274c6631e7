//! Parallel data: pair filters, back-translation filtering and multiway
//! mining through an English pivot.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_script::{Script, UnicodeScript};

use crate::error::{Error, Result};
use crate::lang::{normalize_lang_code, LangCode, LangTables};
use crate::langid::LangIdPredictor;
use crate::metrics::{chrf, script_profile, token_overlap, ChrfParams};
use crate::report::{FilterReport, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentencePair {
    pub src_lang: LangCode,
    pub tgt_lang: LangCode,
    pub src_text: String,
    pub tgt_text: String,
    pub origin: String,
}

impl SentencePair {
    pub fn new(src_lang: &str, tgt_lang: &str, src: &str, tgt: &str, origin: &str) -> Result<Self> {
        Ok(SentencePair {
            src_lang: normalize_lang_code(src_lang)?,
            tgt_lang: normalize_lang_code(tgt_lang)?,
            src_text: src.to_string(),
            tgt_text: tgt.to_string(),
            origin: origin.to_string(),
        })
    }

    pub fn lang_pair(&self) -> String {
        format!("{}-{}", self.src_lang, self.tgt_lang)
    }
}

pub fn read_tsv<R: BufRead>(reader: R) -> Result<Vec<SentencePair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::Data(format!("line {}: expected 5 tab-separated fields, got {}", i + 1, f.len())));
        }
        out.push(
            SentencePair::new(f[0], f[1], f[2], f[3], f[4])
                .map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_tsv<W: Write>(mut w: W, pairs: &[SentencePair]) -> Result<()> {
    for p in pairs {
        for field in [&p.src_text, &p.tgt_text, &p.origin] {
            if field.contains(['\t', '\n']) {
                return Err(Error::Data(format!("field contains a tab or newline: {field:?}")));
            }
        }
        writeln!(w, "{}\t{}\t{}\t{}\t{}", p.src_lang, p.tgt_lang, p.src_text, p.tgt_text, p.origin)?;
    }
    Ok(())
}

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Exact duplicates on both sides and both languages; first one wins.
pub fn dedup_pairs(pairs: Vec<SentencePair>) -> (Vec<SentencePair>, FilterReport) {
    let mut seen = HashSet::new();
    let mut report = FilterReport::new("dedup_pairs");
    let mut out = Vec::new();
    for p in pairs {
        let key = (p.src_text.clone(), p.tgt_text.clone(), p.src_lang.code.clone(), p.tgt_lang.code.clone());
        if seen.insert(key) {
            report.keep();
            out.push(p);
        } else {
            report.reject("duplicate_pair");
        }
    }
    (out, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapParams {
    /// Only pairs whose shorter side has more tokens than this are checked.
    pub min_tokens: usize,
    pub max_overlap: f64,
}

impl Default for OverlapParams {
    fn default() -> Self {
        OverlapParams { min_tokens: 5, max_overlap: 0.75 }
    }
}

pub fn overlap_filter(pair: &SentencePair, p: &OverlapParams) -> Outcome {
    let s = tokens(&pair.src_text);
    let t = tokens(&pair.tgt_text);
    if s.len().min(t.len()) > p.min_tokens && token_overlap(&s, &t) > p.max_overlap {
        Outcome::Drop("source_target_overlap")
    } else {
        Outcome::Keep
    }
}

/// Languages exempt from the length-ratio check, mostly written without
/// spaces between words.
pub const RATIO_EXEMPT: &[&str] = &[
    "zh", "ja", "ko", "km", "my", "lo", "th", "wuu", "shn", "zh_tw", "zh_cn", "iu", "simple", "dz", "kr_arab",
    "din", "nus", "mi",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioExemptions {
    pub langs: BTreeSet<String>,
}

impl Default for RatioExemptions {
    fn default() -> Self {
        RatioExemptions { langs: RATIO_EXEMPT.iter().map(|s| s.to_string()).collect() }
    }
}

impl RatioExemptions {
    pub fn contains(&self, lang: &LangCode) -> bool {
        self.langs.contains(&lang.code.to_lowercase()) || self.langs.contains(&lang.base().to_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for RatioBounds {
    fn default() -> Self {
        RatioBounds { min: 0.66, max: 1.5 }
    }
}

/// Closed-interval token ratio check, skipped for exempt languages.
pub fn length_ratio_filter(pair: &SentencePair, ex: &RatioExemptions, b: &RatioBounds) -> Outcome {
    let s = tokens(&pair.src_text).len();
    let t = tokens(&pair.tgt_text).len();
    if t == 0 {
        return Outcome::Drop("empty_target");
    }
    if ex.contains(&pair.src_lang) || ex.contains(&pair.tgt_lang) {
        return Outcome::Keep;
    }
    let ratio = s as f64 / t as f64;
    if ratio < b.min || ratio > b.max {
        Outcome::Drop("length_ratio")
    } else {
        Outcome::Keep
    }
}

/// Drops a pair when either side is mostly outside its language's script.
/// A language without a script entry cannot be judged; the pair is kept and
/// a warning returned.
pub fn script_filter(pair: &SentencePair, tables: &LangTables, min_in_script: f64) -> (Outcome, Option<String>) {
    let mut warning = None;
    for (lang, text) in [(&pair.src_lang, &pair.src_text), (&pair.tgt_lang, &pair.tgt_text)] {
        match script_profile(text).in_script(lang, tables) {
            Some(share) if share < min_in_script => return (Outcome::Drop("out_of_script"), None),
            Some(_) => {}
            None => warning = Some(format!("no script entry for {lang}; pair kept")),
        }
    }
    (Outcome::Keep, warning)
}

fn unsegmented(c: char) -> bool {
    matches!(
        c.script(),
        Script::Han | Script::Hiragana | Script::Katakana | Script::Thai | Script::Lao | Script::Khmer | Script::Myanmar
    )
}

/// Per-language toxicity term lists.
#[derive(Debug, Clone, Default)]
pub struct ToxicityLists {
    pub terms: BTreeMap<String, Vec<String>>,
}

impl ToxicityLists {
    /// One `<lang>.txt` file per language, one term per line.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let lang = normalize_lang_code(stem)?;
            let list = std::fs::read_to_string(&path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect();
            terms.insert(lang.code, list);
        }
        Ok(ToxicityLists { terms })
    }

    pub fn insert(&mut self, lang: &str, list: &[&str]) -> Result<()> {
        let code = normalize_lang_code(lang)?.code;
        self.terms.insert(code, list.iter().map(|t| t.to_lowercase()).collect());
        Ok(())
    }

    /// `None` when there is no list for `lang`.
    pub fn is_toxic(&self, lang: &LangCode, text: &str) -> Option<bool> {
        let list = self.terms.get(&lang.code)?;
        let lower = text.to_lowercase();
        let padded: String = lower
            .chars()
            .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
            .collect();
        let padded = format!(" {} ", padded.split_whitespace().collect::<Vec<_>>().join(" "));
        Some(list.iter().any(|term| {
            if term.chars().any(unsegmented) {
                lower.contains(term.as_str())
            } else {
                padded.contains(&format!(" {term} "))
            }
        }))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ToxicityStats {
    pub checked: u64,
    pub flagged: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ToxicityReport {
    /// Keyed by language pair (`src-tgt`).
    pub per_pair: BTreeMap<String, ToxicityStats>,
    /// Pairs whose flag rate exceeds the review threshold; their flagged
    /// pairs are kept for human review instead of being dropped.
    pub review: Vec<String>,
    pub filter: FilterReport,
}

/// A pair is flagged when exactly one side contains a listed term. Language
/// pairs flagged above `review_rate` go to review; flagged pairs elsewhere
/// are dropped. Pairs missing a list on either side pass through.
pub fn toxicity_filter(pairs: Vec<SentencePair>, lists: &ToxicityLists, review_rate: f64) -> (Vec<SentencePair>, ToxicityReport) {
    let flags: Vec<Option<bool>> = pairs
        .iter()
        .map(|p| {
            let s = lists.is_toxic(&p.src_lang, &p.src_text)?;
            let t = lists.is_toxic(&p.tgt_lang, &p.tgt_text)?;
            Some(s != t)
        })
        .collect();

    let mut per_pair: BTreeMap<String, ToxicityStats> = BTreeMap::new();
    for (p, f) in pairs.iter().zip(&flags) {
        if let Some(flagged) = f {
            let e = per_pair.entry(p.lang_pair()).or_default();
            e.checked += 1;
            e.flagged += u64::from(*flagged);
        }
    }
    let mut review = Vec::new();
    for (k, s) in per_pair.iter_mut() {
        s.rate = s.flagged as f64 / s.checked as f64;
        if s.rate > review_rate {
            review.push(k.clone());
        }
    }

    let mut filter = FilterReport::new("toxicity");
    let mut kept = Vec::new();
    for (p, f) in pairs.into_iter().zip(flags) {
        if f == Some(true) && !review.contains(&p.lang_pair()) {
            filter.reject("unmatched_toxicity");
        } else {
            filter.keep();
            kept.push(p);
        }
    }
    (kept, ToxicityReport { per_pair, review, filter })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtCandidate {
    pub natural_target: String,
    pub bt_source: String,
    pub roundtrip_target: String,
    pub src_lang: LangCode,
    pub tgt_lang: LangCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtParams {
    pub min_roundtrip: f64,
    pub max_copy: f64,
    /// Open interval on source/target token ratio.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub check_langid: bool,
}

impl Default for BtParams {
    fn default() -> Self {
        BtParams { min_roundtrip: 0.32, max_copy: 0.30, ratio_min: 0.45, ratio_max: 1.6, check_langid: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtScores {
    /// chrF on the 0-1 scale.
    pub roundtrip: f64,
    pub copy: f64,
    pub ratio: f64,
    pub predicted_lang: Option<LangCode>,
}

pub fn bt_scores(c: &BtCandidate, chrf_params: &ChrfParams, predictor: Option<&dyn LangIdPredictor>) -> BtScores {
    let s = tokens(&c.bt_source).len();
    let t = tokens(&c.natural_target).len();
    BtScores {
        roundtrip: chrf(&c.roundtrip_target, &c.natural_target, chrf_params) / 100.0,
        copy: chrf(&c.bt_source, &c.natural_target, chrf_params) / 100.0,
        ratio: if t == 0 { f64::INFINITY } else { s as f64 / t as f64 },
        predicted_lang: predictor.map(|p| p.predict(&c.bt_source).lang),
    }
}

pub fn bt_decide(scores: &BtScores, src_lang: &LangCode, p: &BtParams) -> Outcome {
    if scores.roundtrip < p.min_roundtrip {
        Outcome::Drop("roundtrip_chrf")
    } else if scores.copy > p.max_copy {
        Outcome::Drop("copy_chrf")
    } else if !(scores.ratio > p.ratio_min && scores.ratio < p.ratio_max) {
        Outcome::Drop("length_ratio")
    } else if p.check_langid && scores.predicted_lang.as_ref().is_some_and(|l| l.code != src_lang.code) {
        Outcome::Drop("langid")
    } else {
        Outcome::Keep
    }
}

pub fn bt_filter(
    c: &BtCandidate,
    p: &BtParams,
    chrf_params: &ChrfParams,
    predictor: Option<&dyn LangIdPredictor>,
) -> Outcome {
    let predictor = if p.check_langid { predictor } else { None };
    bt_decide(&bt_scores(c, chrf_params, predictor), &c.src_lang, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Ngram,
    #[default]
    Both,
}

/// One English-centric pair seen from its non-English side.
#[derive(Debug, Clone)]
pub struct PivotRecord {
    pub lang: LangCode,
    pub text: String,
    pub english: String,
}

/// Split en-centric input into pivot records; pairs without exactly one
/// English side are skipped and counted.
pub fn pivot_records(pairs: &[SentencePair]) -> (Vec<PivotRecord>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for p in pairs {
        let (s_en, t_en) = (p.src_lang.base() == "en", p.tgt_lang.base() == "en");
        match (s_en, t_en) {
            (true, false) => out.push(PivotRecord { lang: p.tgt_lang.clone(), text: p.tgt_text.clone(), english: p.src_text.clone() }),
            (false, true) => out.push(PivotRecord { lang: p.src_lang.clone(), text: p.src_text.clone(), english: p.tgt_text.clone() }),
            _ => skipped += 1,
        }
    }
    (out, skipped)
}

/// The match predicate on two English sides.
pub fn english_sides_match(a: &str, b: &str, mode: MatchMode, n: usize) -> bool {
    let exact = || a == b;
    let ngram = || {
        let ta = tokens(a);
        let tb = tokens(b);
        if ta.len() < n || tb.len() < n {
            return false;
        }
        let set: HashSet<&[&str]> = ta.windows(n).collect();
        tb.windows(n).any(|w| set.contains(w))
    };
    match mode {
        MatchMode::Exact => exact(),
        MatchMode::Ngram => ngram(),
        MatchMode::Both => exact() || ngram(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MultiwayResult {
    /// Deduplicated, sorted; `src_lang < tgt_lang`.
    pub pairs: Vec<SentencePair>,
    /// Number of pivot matches behind each emitted pair, aligned with `pairs`.
    pub multiplicity: Vec<u64>,
    pub skipped_inputs: usize,
}

fn finish_multiway(found: BTreeMap<SentencePair, u64>, skipped: usize) -> MultiwayResult {
    let (pairs, multiplicity) = found.into_iter().unzip();
    MultiwayResult { pairs, multiplicity, skipped_inputs: skipped }
}

fn emit(found: &mut BTreeMap<SentencePair, u64>, a: &PivotRecord, b: &PivotRecord) {
    let (x, y) = if a.lang < b.lang { (a, b) } else { (b, a) };
    let pair = SentencePair {
        src_lang: x.lang.clone(),
        tgt_lang: y.lang.clone(),
        src_text: x.text.clone(),
        tgt_text: y.text.clone(),
        origin: "multiway".into(),
    };
    *found.entry(pair).or_insert(0) += 1;
}

/// Join English-centric bitexts on their English sides. Candidates come from
/// an exact-text index and an inverted index over English n-grams.
pub fn mine_multiway(pairs: &[SentencePair], mode: MatchMode, n: usize) -> MultiwayResult {
    let (records, skipped) = pivot_records(pairs);
    let toks: Vec<Vec<&str>> = records.iter().map(|r| tokens(&r.english)).collect();

    let mut by_text: HashMap<&str, Vec<u32>> = HashMap::new();
    let mut by_gram: HashMap<&[&str], Vec<u32>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if mode != MatchMode::Ngram {
            by_text.entry(r.english.as_str()).or_default().push(i as u32);
        }
        if mode != MatchMode::Exact && n > 0 && toks[i].len() >= n {
            let mut seen = HashSet::new();
            for w in toks[i].windows(n) {
                if seen.insert(w) {
                    by_gram.entry(w).or_default().push(i as u32);
                }
            }
        }
    }

    let mut found = BTreeMap::new();
    let mut cands: Vec<u32> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        cands.clear();
        if let Some(v) = by_text.get(r.english.as_str()) {
            cands.extend(v.iter().copied().filter(|&j| j as usize > i));
        }
        if mode != MatchMode::Exact && n > 0 && toks[i].len() >= n {
            for w in toks[i].windows(n) {
                if let Some(v) = by_gram.get(w) {
                    cands.extend(v.iter().copied().filter(|&j| j as usize > i));
                }
            }
        }
        cands.sort_unstable();
        cands.dedup();
        for &j in &cands {
            let other = &records[j as usize];
            if other.lang != r.lang {
                emit(&mut found, r, other);
            }
        }
    }
    finish_multiway(found, skipped)
}

/// Quadratic reference used to check [`mine_multiway`].
pub fn mine_multiway_brute_force(pairs: &[SentencePair], mode: MatchMode, n: usize) -> MultiwayResult {
    let (records, skipped) = pivot_records(pairs);
    let mut found = BTreeMap::new();
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            if records[i].lang != records[j].lang && english_sides_match(&records[i].english, &records[j].english, mode, n) {
                emit(&mut found, &records[i], &records[j]);
            }
        }
    }
    finish_multiway(found, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParallelFilterConfig {
    pub overlap: OverlapParams,
    pub ratio: RatioBounds,
    pub exemptions: RatioExemptions,
    pub min_in_script: f64,
    pub toxicity_review_rate: f64,
}

impl Default for ParallelFilterConfig {
    fn default() -> Self {
        ParallelFilterConfig {
            overlap: OverlapParams::default(),
            ratio: RatioBounds::default(),
            exemptions: RatioExemptions::default(),
            min_in_script: 0.5,
            toxicity_review_rate: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub before: u64,
    pub after: u64,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParallelReport {
    pub stages: Vec<FilterReport>,
    pub per_pair: BTreeMap<String, PairCounts>,
    pub toxicity: Option<ToxicityReport>,
    pub warnings: Vec<String>,
}

fn run_stage(
    name: &str,
    pairs: Vec<SentencePair>,
    mut f: impl FnMut(&SentencePair) -> Outcome,
) -> (Vec<SentencePair>, FilterReport) {
    let mut report = FilterReport::new(name);
    let mut kept = Vec::new();
    for p in pairs {
        let o = f(&p);
        report.record(o);
        if o.is_keep() {
            kept.push(p);
        }
    }
    (kept, report)
}

/// Dedup, overlap, length ratio, script and (when lists are given) toxicity.
pub fn filter_pairs(
    pairs: Vec<SentencePair>,
    cfg: &ParallelFilterConfig,
    tables: &LangTables,
    toxicity: Option<&ToxicityLists>,
) -> (Vec<SentencePair>, ParallelReport) {
    let mut report = ParallelReport::default();
    for p in &pairs {
        report.per_pair.entry(p.lang_pair()).or_default().before += 1;
    }
    let (pairs, r) = dedup_pairs(pairs);
    report.stages.push(r);
    let (pairs, r) = run_stage("overlap", pairs, |p| overlap_filter(p, &cfg.overlap));
    report.stages.push(r);
    let (pairs, r) = run_stage("length_ratio", pairs, |p| length_ratio_filter(p, &cfg.exemptions, &cfg.ratio));
    report.stages.push(r);
    let mut warnings = BTreeSet::new();
    let (mut pairs, r) = run_stage("script", pairs, |p| {
        let (o, w) = script_filter(p, tables, cfg.min_in_script);
        if let Some(w) = w {
            warnings.insert(w);
        }
        o
    });
    report.stages.push(r);
    report.warnings = warnings.into_iter().collect();
    if let Some(lists) = toxicity {
        let (kept, tox) = toxicity_filter(pairs, lists, cfg.toxicity_review_rate);
        report.stages.push(tox.filter.clone());
        report.toxicity = Some(tox);
        pairs = kept;
    }
    for p in &pairs {
        report.per_pair.entry(p.lang_pair()).or_default().after += 1;
    }
    for c in report.per_pair.values_mut() {
        c.reduction_pct = if c.before == 0 { 0.0 } else { 100.0 * (c.before - c.after) as f64 / c.before as f64 };
    }
    (pairs, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(sl: &str, tl: &str, s: &str, t: &str) -> SentencePair {
        SentencePair::new(sl, tl, s, t, "test").unwrap()
    }

    #[test]
    fn tsv_round_trip() {
        let input = "en\tde\tHello\tHallo\tsrc1\n";
        let pairs = read_tsv(input.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_tsv(&mut out, &pairs).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), input);
        assert!(read_tsv("en\tde\tx\n".as_bytes()).is_err());
        let bad = pair("en", "de", "a\tb", "c");
        assert!(write_tsv(Vec::new(), &[bad]).is_err());
    }

    #[test]
    fn dedup() {
        let a = pair("en", "de", "x", "y");
        let b = pair("en", "de", "x", "z");
        let (out, r) = dedup_pairs(vec![a.clone(), a.clone(), b]);
        assert_eq!(out.len(), 2);
        assert_eq!(r.dropped, 1);
    }

    #[test]
    fn overlap_boundaries() {
        let p = OverlapParams::default();
        let six = "a b c d e f";
        assert_eq!(overlap_filter(&pair("en", "de", six, six), &p), Outcome::Drop("source_target_overlap"));
        let five = "a b c d e";
        assert_eq!(overlap_filter(&pair("en", "de", five, five), &p), Outcome::Keep);
        let s = "a b c d e f g h";
        let t = "a b c d e f x y";
        assert_eq!(overlap_filter(&pair("en", "de", s, t), &p), Outcome::Keep);
    }

    #[test]
    fn ratio_boundaries() {
        let ex = RatioExemptions::default();
        let b = RatioBounds::default();
        let words = |n: usize| vec!["w"; n].join(" ");
        let f = |sl: &str, tl: &str, s: usize, t: usize| length_ratio_filter(&pair(sl, tl, &words(s), &words(t)), &ex, &b);
        assert_eq!(f("en", "de", 10, 20), Outcome::Drop("length_ratio"));
        assert_eq!(f("en", "de", 10, 10), Outcome::Keep);
        assert_eq!(f("en", "zh", 3, 10), Outcome::Keep);
        assert_eq!(f("en", "de", 66, 100), Outcome::Keep);
        assert_eq!(f("en", "de", 3, 2), Outcome::Keep);
        assert_eq!(f("en", "de", 65, 100), Outcome::Drop("length_ratio"));
        assert_eq!(f("en", "de", 3, 0), Outcome::Drop("empty_target"));
        assert_eq!(f("en", "zh_TW", 1, 10), Outcome::Keep);
        assert_eq!(f("kr_Arab", "en", 1, 10), Outcome::Keep);
        assert_eq!(f("dz", "en", 1, 10), Outcome::Keep);
    }

    #[test]
    fn script_check() {
        let t = LangTables::global();
        let kaa = pair("kaa", "en", "abcdefg жзи", "hello there");
        assert_eq!(script_filter(&kaa, t, 0.5).0, Outcome::Drop("out_of_script"));
        let ok = pair("ru", "en", "привет мир", "hello world");
        assert_eq!(script_filter(&ok, t, 0.5), (Outcome::Keep, None));
        let half = pair("ru", "en", "abc где", "hello");
        assert_eq!(script_filter(&half, t, 0.5).0, Outcome::Keep);
        let unmapped = pair("qqq", "en", "whatever", "hello");
        let (o, w) = script_filter(&unmapped, t, 0.5);
        assert_eq!(o, Outcome::Keep);
        assert!(w.is_some());
    }

    #[test]
    fn toxicity() {
        let mut lists = ToxicityLists::default();
        lists.insert("en", &["badword"]).unwrap();
        lists.insert("de", &["schlimm"]).unwrap();
        lists.insert("fr", &["mauvais"]).unwrap();
        let mut pairs = Vec::new();
        for i in 0..100 {
            let src = if i < 4 { format!("a badword {i}") } else { format!("fine {i}") };
            pairs.push(pair("en", "de", &src, "gut"));
        }
        for i in 0..100 {
            let src = if i < 2 { format!("a badword {i}") } else { format!("fine {i}") };
            pairs.push(pair("en", "fr", &src, "bien"));
        }
        pairs.push(pair("en", "fr", "badword!", "mauvais"));
        pairs.push(pair("en", "xx", "badword", "clean"));
        let (kept, rep) = toxicity_filter(pairs, &lists, 0.03);
        assert_eq!(rep.review, vec!["en-de".to_string()]);
        assert_eq!(rep.per_pair["en-de"].flagged, 4);
        assert_eq!(rep.filter.dropped, 2);
        assert_eq!(kept.len(), 200);
        assert!(!rep.per_pair.contains_key("en-xx"));
    }

    #[test]
    fn bt() {
        let c = |bt: &str, rt: &str, nat: &str| BtCandidate {
            natural_target: nat.into(),
            bt_source: bt.into(),
            roundtrip_target: rt.into(),
            src_lang: normalize_lang_code("de").unwrap(),
            tgt_lang: normalize_lang_code("en").unwrap(),
        };
        let p = BtParams { check_langid: false, ..Default::default() };
        let cp = ChrfParams::default();
        let copy = c("the cat sat on the mat", "the cat sat on the mat", "the cat sat on the mat");
        assert_eq!(bt_filter(&copy, &p, &cp, None), Outcome::Drop("copy_chrf"));
        let good = c("die Katze saß auf der Matte", "the cat sat on the mat", "the cat sat on the mat");
        assert_eq!(bt_filter(&good, &p, &cp, None), Outcome::Keep);
        let mut s = bt_scores(&good, &cp, None);
        s.roundtrip = 0.31;
        assert_eq!(bt_decide(&s, &good.src_lang, &p), Outcome::Drop("roundtrip_chrf"));
        s.roundtrip = 0.5;
        s.ratio = 1.6;
        assert_eq!(bt_decide(&s, &good.src_lang, &p), Outcome::Drop("length_ratio"));
        s.ratio = 0.45;
        assert_eq!(bt_decide(&s, &good.src_lang, &p), Outcome::Drop("length_ratio"));
        let open = BtParams { min_roundtrip: 0.0, max_copy: 1.0, ratio_min: 0.0, ratio_max: f64::INFINITY, check_langid: false };
        assert_eq!(bt_filter(&copy, &open, &cp, None), Outcome::Keep);
    }

    #[test]
    fn multiway_small() {
        let e1 = "one two three four five six seven eight nine";
        let e2 = "zero one two three four five six seven eight";
        let pairs = vec![
            pair("de", "en", "eins", e1),
            pair("en", "fr", e2, "un"),
            pair("en", "es", "short text here", "corto"),
            pair("it", "en", "corto it", "short text here"),
            pair("ja", "en", "seven", "a b c d e f g"),
            pair("ko", "en", "seven", "a b c d e f x"),
            pair("de", "fr", "x", "y"),
        ];
        let r = mine_multiway(&pairs, MatchMode::Both, 8);
        let got: Vec<(String, String)> = r.pairs.iter().map(|p| (p.src_lang.code.clone(), p.tgt_lang.code.clone())).collect();
        assert_eq!(got, vec![("de".into(), "fr".into()), ("es".into(), "it".into())]);
        assert_eq!(r.skipped_inputs, 1);
        assert_eq!(r, mine_multiway_brute_force(&pairs, MatchMode::Both, 8));
        assert_eq!(mine_multiway(&pairs, MatchMode::Exact, 8).pairs.len(), 1);
    }

    #[test]
    fn chain_reports() {
        let pairs = vec![
            pair("en", "de", "hello there friend", "hallo da freund"),
            pair("en", "de", "hello there friend", "hallo da freund"),
            pair("en", "de", "a", "b c d e"),
        ];
        let (kept, rep) = filter_pairs(pairs, &ParallelFilterConfig::default(), LangTables::global(), None);
        assert_eq!(kept.len(), 1);
        let c = rep.per_pair["en-de"];
        assert_eq!((c.before, c.after), (3, 1));
        assert!((c.reduction_pct - 200.0 / 3.0).abs() < 1e-9);
    }
}
