//! Script-level repairs: detached virama spacing, Zawgyi-encoded Myanmar
//! text, and the Mandarin blocklist.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::lang::{normalize_lang_code, LangCode};
use crate::report::Outcome;

const VIRAMA_CHARS: &str = include_str!("../data/virama_chars.txt");
const VIRAMA_LANGS: &str = include_str!("../data/virama_langs.txt");
const ZH_BLOCKLIST: &str = include_str!("../data/zh_blocklist.txt");

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_code_point(s: &str) -> Result<char> {
    let hex = s
        .trim()
        .strip_prefix("U+")
        .ok_or_else(|| Error::Data(format!("expected U+XXXX, got {s:?}")))?;
    u32::from_str_radix(hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| Error::Data(format!("bad code point {s:?}")))
}

#[derive(Debug, Clone)]
pub struct ViramaConfig {
    /// Entries in file order, repeats included.
    pub listed: Vec<char>,
    pub virama_chars: BTreeSet<char>,
    pub applicable_langs: BTreeSet<String>,
}

impl ViramaConfig {
    pub fn parse(chars: &str, langs: &str) -> Result<Self> {
        let listed = data_lines(chars).map(parse_code_point).collect::<Result<Vec<_>>>()?;
        let applicable_langs = data_lines(langs)
            .map(|l| normalize_lang_code(l.trim()).map(|c| c.code))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(ViramaConfig {
            virama_chars: listed.iter().copied().collect(),
            listed,
            applicable_langs,
        })
    }

    pub fn load(chars: &Path, langs: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(chars)?, &std::fs::read_to_string(langs)?)
    }

    pub fn applies_to(&self, lang: &LangCode) -> bool {
        self.applicable_langs.contains(&lang.code)
            || (lang.script_suffix.is_none() && self.applicable_langs.contains(lang.base()))
    }
}

impl Default for ViramaConfig {
    fn default() -> Self {
        Self::parse(VIRAMA_CHARS, VIRAMA_LANGS).expect("bundled virama tables")
    }
}

fn is_virama_space(c: char) -> bool {
    c == ' ' || c == '\u{00A0}'
}

/// Delete every run of spaces sitting directly before a listed virama.
pub fn fix_virama(text: &str, lang: &LangCode, cfg: &ViramaConfig) -> String {
    if !cfg.applies_to(lang) {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if cfg.virama_chars.contains(&c) {
            while out.ends_with(is_virama_space) {
                out.pop();
            }
        }
        out.push(c);
    }
    out
}

pub fn fix_virama_doc(mut doc: Document, cfg: &ViramaConfig) -> (Document, bool) {
    if !cfg.applies_to(&doc.lang) {
        return (doc, false);
    }
    let mut changed = false;
    for line in &mut doc.lines {
        let fixed = fix_virama(line, &doc.lang, cfg);
        if fixed != *line {
            *line = fixed;
            changed = true;
        }
    }
    (doc, changed)
}

pub trait ZawgyiDetector: Send + Sync {
    /// Probability in [0, 1] that `text` is Zawgyi-encoded.
    fn probability(&self, text: &str) -> f64;
}

pub trait ZawgyiConverter: Send + Sync {
    fn convert(&self, text: &str) -> Result<String>;
}

fn is_myanmar(c: char) -> bool {
    ('\u{1000}'..='\u{109F}').contains(&c)
}

fn is_consonant(c: char) -> bool {
    ('\u{1000}'..='\u{1021}').contains(&c)
}

/// Scores code point pairs whose order or meaning differs between the two
/// encodings and squashes the summed log-likelihood ratio through a sigmoid.
#[derive(Debug, Clone, Copy, Default)]
pub struct BigramDetector;

impl BigramDetector {
    pub fn log_likelihood_ratio(text: &str) -> f64 {
        let chars: Vec<char> = text.chars().collect();
        let mut llr = 0.0;
        for (i, &c) in chars.iter().enumerate() {
            let prev = if i > 0 { Some(chars[i - 1]) } else { None };
            let next = chars.get(i + 1).copied();
            let prev_cons_or_medial =
                prev.is_some_and(|p| is_consonant(p) || ('\u{103B}'..='\u{103E}').contains(&p));
            match c {
                // Vowel sign E is stored after the consonant in Unicode, before it in Zawgyi.
                '\u{1031}' if prev_cons_or_medial => llr -= 2.0,
                '\u{1031}' if next.is_some_and(is_consonant) => llr += 3.0,
                // Zawgyi's medial ra is a prefix; Unicode's medial ya always follows a consonant.
                '\u{103B}' if !prev.is_some_and(is_consonant) => llr += 3.0,
                // Zawgyi uses U+1039 as a visible asat at syllable end.
                '\u{1039}' if !next.is_some_and(is_consonant) => llr += 2.0,
                // Unicode asat closes a syllable.
                '\u{103A}' if next.is_none_or(|n| !is_myanmar(n) || matches!(n, '\u{1037}' | '\u{1038}')) => {
                    llr -= 1.5
                }
                '\u{103A}' if next.is_some_and(is_consonant) => llr -= 1.0,
                // Unicode kinzi.
                '\u{1004}' if next == Some('\u{103A}') && chars.get(i + 2) == Some(&'\u{1039}') => llr -= 3.0,
                // Zawgyi-only presentation forms (kinzi, stacked consonants).
                '\u{1060}'..='\u{1097}' => llr += 1.0,
                _ => {}
            }
        }
        llr
    }
}

impl ZawgyiDetector for BigramDetector {
    fn probability(&self, text: &str) -> f64 {
        if !text.chars().any(is_myanmar) {
            return 0.0;
        }
        let llr = Self::log_likelihood_ratio(text);
        1.0 / (1.0 + (-llr).exp())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityConverter;

impl ZawgyiConverter for IdentityConverter {
    fn convert(&self, text: &str) -> Result<String> {
        Ok(text.to_string())
    }
}

/// Code point remapping plus reordering of prefix vowels and medials.
/// Covers the common cases only.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleConverter;

enum Unit {
    PrefixE,
    PrefixRa,
    Consonant(char),
    Medial(char),
    Kinzi,
    Other(&'static [char]),
    Stacked(char),
    Char(char),
}

fn zawgyi_unit(c: char) -> Unit {
    const STACKED: &[(char, char)] = &[
        ('\u{1060}', '\u{1000}'),
        ('\u{1061}', '\u{1001}'),
        ('\u{1062}', '\u{1002}'),
        ('\u{1063}', '\u{1003}'),
        ('\u{1065}', '\u{1005}'),
        ('\u{1066}', '\u{1006}'),
        ('\u{1067}', '\u{1006}'),
        ('\u{1068}', '\u{1007}'),
        ('\u{1069}', '\u{1008}'),
        ('\u{106C}', '\u{100B}'),
        ('\u{106D}', '\u{100C}'),
        ('\u{1070}', '\u{100F}'),
        ('\u{1071}', '\u{1010}'),
        ('\u{1072}', '\u{1010}'),
        ('\u{1073}', '\u{1011}'),
        ('\u{1074}', '\u{1011}'),
        ('\u{1075}', '\u{1012}'),
        ('\u{1076}', '\u{1013}'),
        ('\u{1077}', '\u{1014}'),
        ('\u{1078}', '\u{1015}'),
        ('\u{1079}', '\u{1016}'),
        ('\u{107A}', '\u{1017}'),
        ('\u{107B}', '\u{1018}'),
        ('\u{107C}', '\u{1019}'),
        ('\u{1085}', '\u{101C}'),
    ];
    match c {
        '\u{1031}' => Unit::PrefixE,
        '\u{103B}' | '\u{107E}'..='\u{1084}' => Unit::PrefixRa,
        '\u{1000}'..='\u{1021}' => Unit::Consonant(c),
        '\u{103A}' | '\u{107D}' => Unit::Medial('\u{103B}'),
        '\u{103C}' => Unit::Medial('\u{103D}'),
        '\u{103D}' | '\u{1087}' => Unit::Medial('\u{103E}'),
        '\u{1064}' => Unit::Kinzi,
        '\u{1039}' => Unit::Char('\u{103A}'),
        '\u{1033}' => Unit::Char('\u{102F}'),
        '\u{1034}' => Unit::Char('\u{1030}'),
        '\u{108F}' => Unit::Consonant('\u{1014}'),
        '\u{1090}' => Unit::Consonant('\u{101B}'),
        '\u{1086}' => Unit::Char('\u{103F}'),
        '\u{1094}' | '\u{1095}' => Unit::Char('\u{1037}'),
        '\u{105A}' => Unit::Other(&['\u{102B}', '\u{103A}']),
        '\u{1088}' => Unit::Other(&['\u{103E}', '\u{102F}']),
        '\u{1089}' => Unit::Other(&['\u{103E}', '\u{1030}']),
        '\u{108A}' => Unit::Other(&['\u{103D}', '\u{103E}']),
        _ => match STACKED.iter().find(|(z, _)| *z == c) {
            Some((_, base)) => Unit::Stacked(*base),
            None => Unit::Char(c),
        },
    }
}

impl ZawgyiConverter for RuleConverter {
    fn convert(&self, text: &str) -> Result<String> {
        let units: Vec<Unit> = text.chars().map(zawgyi_unit).collect();
        let mut out = String::with_capacity(text.len());
        let mut prefix_e = false;
        let mut prefix_ra = false;
        let mut i = 0;
        while i < units.len() {
            match &units[i] {
                Unit::PrefixE => prefix_e = true,
                Unit::PrefixRa => prefix_ra = true,
                Unit::Consonant(c) => {
                    let mut j = i + 1;
                    if matches!(units.get(j), Some(Unit::Kinzi)) {
                        out.push_str("\u{1004}\u{103A}\u{1039}");
                        j += 1;
                    }
                    out.push(*c);
                    let mut medials: Vec<char> = Vec::new();
                    if prefix_ra {
                        medials.push('\u{103C}');
                    }
                    while let Some(Unit::Medial(m)) = units.get(j) {
                        medials.push(*m);
                        j += 1;
                    }
                    medials.sort_unstable();
                    medials.dedup();
                    out.extend(medials);
                    if prefix_e {
                        out.push('\u{1031}');
                    }
                    prefix_e = false;
                    prefix_ra = false;
                    i = j;
                    continue;
                }
                Unit::Medial(m) => out.push(*m),
                Unit::Kinzi => out.push_str("\u{1004}\u{103A}\u{1039}"),
                Unit::Other(seq) => out.extend(seq.iter()),
                Unit::Stacked(c) => {
                    out.push('\u{1039}');
                    out.push(*c);
                }
                Unit::Char(c) => {
                    flush_prefixes(&mut out, &mut prefix_e, &mut prefix_ra);
                    out.push(*c);
                }
            }
            i += 1;
        }
        flush_prefixes(&mut out, &mut prefix_e, &mut prefix_ra);
        Ok(out)
    }
}

fn flush_prefixes(out: &mut String, e: &mut bool, ra: &mut bool) {
    if *ra {
        out.push('\u{103C}');
    }
    if *e {
        out.push('\u{1031}');
    }
    *e = false;
    *ra = false;
}

pub const MYANMAR_SCRIPT_LANGS: &[&str] = &["my", "mnw", "shn"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZawgyiOutcome {
    pub probability: f64,
    pub converted: bool,
    pub error: Option<String>,
}

/// Convert a Myanmar-script document when the detector's probability for its
/// text exceeds `threshold`. Converter failures leave the document unchanged.
pub fn maybe_convert_zawgyi(
    mut doc: Document,
    threshold: f64,
    detector: &dyn ZawgyiDetector,
    converter: &dyn ZawgyiConverter,
) -> (Document, ZawgyiOutcome) {
    let mut outcome = ZawgyiOutcome { probability: 0.0, converted: false, error: None };
    if !MYANMAR_SCRIPT_LANGS.contains(&doc.lang.base()) {
        return (doc, outcome);
    }
    let text = doc.text();
    outcome.probability = detector.probability(&text);
    if outcome.probability > threshold {
        match converter.convert(&text) {
            Ok(converted) => {
                doc.lines = converted.split('\n').map(str::to_string).collect();
                outcome.converted = true;
            }
            Err(e) => outcome.error = Some(e.to_string()),
        }
    }
    (doc, outcome)
}

#[derive(Debug, Clone)]
pub struct ZhBlocklist {
    pub signals: Vec<String>,
}

impl ZhBlocklist {
    pub fn parse(text: &str) -> Result<Self> {
        let signals: Vec<String> = data_lines(text).map(str::to_string).collect();
        if signals.is_empty() {
            return Err(Error::Data("empty blocklist".into()));
        }
        Ok(ZhBlocklist { signals })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn contains(&self, text: &str) -> bool {
        self.signals.iter().any(|s| text.contains(s.as_str()))
    }
}

impl Default for ZhBlocklist {
    fn default() -> Self {
        Self::parse(ZH_BLOCKLIST).expect("bundled blocklist")
    }
}

/// Drop Mandarin documents containing any blocklist entry. Other languages pass.
pub fn zh_blocklist_filter(doc: &Document, bl: &ZhBlocklist) -> Outcome {
    if doc.lang.base() != "zh" {
        return Outcome::Keep;
    }
    if doc.lines.iter().any(|l| bl.contains(l)) {
        Outcome::Drop("zh_blocklist")
    } else {
        Outcome::Keep
    }
}
