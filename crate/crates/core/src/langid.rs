//! Sentence-level language identification contract and document labeling
//! by majority vote.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use unicode_script::{Script, UnicodeScript};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::lang::{normalize_lang_code, LangCode, LangTables};
use crate::metrics::is_letter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangPrediction {
    pub lang: LangCode,
    pub confidence: f64,
}

pub trait LangIdPredictor: Send + Sync {
    fn predict(&self, sentence: &str) -> LangPrediction;
}

/// Modal language; ties go to the higher summed confidence, then the
/// lexicographically smaller code.
pub fn majority_vote(preds: &[LangPrediction]) -> Result<LangCode> {
    let mut tally: BTreeMap<&str, (usize, f64, &LangCode)> = BTreeMap::new();
    for p in preds {
        let e = tally.entry(p.lang.as_str()).or_insert((0, 0.0, &p.lang));
        e.0 += 1;
        e.1 += p.confidence;
    }
    let mut best: Option<(&str, usize, f64, &LangCode)> = None;
    // BTreeMap iterates in code order, so strict comparisons keep the smaller code.
    for (code, (n, conf, lang)) in tally {
        let better = match best {
            None => true,
            Some((_, bn, bc, _)) => n > bn || (n == bn && conf > bc),
        };
        if better {
            best = Some((code, n, conf, lang));
        }
    }
    best.map(|b| b.3.clone()).ok_or(Error::UndefinedLanguage)
}

/// Predict every sentence (recording the prediction on it) and return the
/// document label.
pub fn predict_document_lang(doc: &mut Document, predictor: &dyn LangIdPredictor) -> Result<LangCode> {
    if doc.sentences.is_empty() {
        return Err(Error::UndefinedLanguage);
    }
    let mut preds = Vec::with_capacity(doc.sentences.len());
    for s in &mut doc.sentences {
        let p = predictor.predict(&s.text);
        s.predicted_lang = Some(p.lang.clone());
        preds.push(p);
    }
    majority_vote(&preds)
}

const STOPWORDS: &[(&str, &[&str])] = &[
    ("en", &["the", "and", "of", "to", "is", "in", "that", "it", "was", "for", "with", "are", "this"]),
    ("fr", &["le", "la", "les", "et", "est", "des", "une", "dans", "pour", "que", "qui", "pas", "sur"]),
    ("de", &["der", "die", "das", "und", "ist", "nicht", "ein", "eine", "mit", "den", "auf", "sich", "zu"]),
    ("es", &["el", "los", "las", "y", "es", "del", "una", "por", "con", "para", "como", "pero", "muy"]),
    ("it", &["il", "di", "che", "non", "per", "sono", "della", "gli", "una", "con", "anche", "questo"]),
    ("pt", &["o", "os", "e", "do", "da", "não", "uma", "com", "para", "em", "que", "mais", "foi"]),
    ("nl", &["de", "het", "een", "en", "van", "niet", "dat", "ik", "is", "op", "te", "zijn", "voor"]),
    ("id", &["yang", "dan", "di", "ini", "itu", "dengan", "untuk", "tidak", "dari", "ada", "akan"]),
    ("ru", &["и", "в", "не", "на", "что", "он", "это", "как", "с", "по", "но", "она", "был"]),
    ("uk", &["і", "в", "не", "на", "що", "це", "як", "та", "з", "до", "але", "він", "була"]),
    ("ar", &["في", "من", "على", "أن", "إلى", "عن", "هذا", "التي", "الذي", "مع", "كان"]),
    ("fa", &["و", "در", "به", "از", "که", "این", "را", "با", "است", "برای", "آن"]),
    ("ur", &["کے", "کی", "میں", "ہے", "اور", "سے", "کو", "یہ", "نے", "ہیں", "کا"]),
    ("hi", &["है", "के", "में", "की", "और", "को", "से", "का", "यह", "हैं", "पर", "नहीं"]),
    ("mr", &["आहे", "आणि", "या", "हे", "ते", "की", "होते", "नाही", "करून", "त्या"]),
    ("ne", &["छ", "र", "को", "मा", "हो", "गरेको", "पनि", "भएको", "थियो", "लागि"]),
];

/// Deterministic stand-in for a neural sentence classifier: picks the
/// dominant letter script, then breaks ties between languages that share
/// it using small stopword lists.
#[derive(Debug, Clone)]
pub struct ScriptStubPredictor {
    by_script: BTreeMap<String, LangCode>,
    stopwords: Vec<(LangCode, Script, Vec<&'static str>)>,
    none: LangCode,
}

impl Default for ScriptStubPredictor {
    fn default() -> Self {
        Self::new(LangTables::global())
    }
}

impl ScriptStubPredictor {
    pub fn new(tables: &LangTables) -> Self {
        let stopwords: Vec<(LangCode, Script, Vec<&'static str>)> = STOPWORDS
            .iter()
            .map(|(code, words)| {
                let lang = normalize_lang_code(code).expect("stopword language");
                let script = tables.scripts[*code][0];
                (lang, script, words.to_vec())
            })
            .collect();

        // Scripts used by exactly one language map straight to it; shared
        // scripts fall back to a fixed default.
        let mut users: BTreeMap<String, Vec<&str>> = BTreeMap::new();
        for (code, scripts) in &tables.scripts {
            for s in scripts {
                users.entry(s.full_name().to_string()).or_default().push(code);
            }
        }
        let defaults = [
            ("Latin", "en"),
            ("Cyrillic", "ru"),
            ("Arabic", "ar"),
            ("Devanagari", "hi"),
            ("Han", "zh"),
            ("Hiragana", "ja"),
            ("Katakana", "ja"),
            ("Myanmar", "my"),
            ("Bengali", "bn"),
            ("Tibetan", "bo"),
            ("Lao", "lo"),
            ("Kannada", "kn"),
            ("Hebrew", "he"),
            ("Greek", "el"),
            ("Ethiopic", "am"),
            ("Tifinagh", "zgh"),
        ];
        let mut by_script = BTreeMap::new();
        for (script, codes) in &users {
            let pick = defaults
                .iter()
                .find(|(s, _)| s == script)
                .map(|(_, c)| *c)
                .or(if codes.len() == 1 { Some(codes[0]) } else { None });
            if let Some(code) = pick {
                by_script.insert(script.clone(), normalize_lang_code(code).expect("script default"));
            }
        }
        ScriptStubPredictor {
            by_script,
            stopwords,
            none: normalize_lang_code("zxx").expect("zxx"),
        }
    }
}

impl LangIdPredictor for ScriptStubPredictor {
    fn predict(&self, sentence: &str) -> LangPrediction {
        let mut hist: HashMap<Script, usize> = HashMap::new();
        let mut letters = 0usize;
        for c in sentence.chars().filter(|c| is_letter(*c)) {
            letters += 1;
            *hist.entry(c.script()).or_insert(0) += 1;
        }
        if letters == 0 {
            return LangPrediction { lang: self.none.clone(), confidence: 0.0 };
        }
        let kana = hist.get(&Script::Hiragana).unwrap_or(&0) + hist.get(&Script::Katakana).unwrap_or(&0);
        let (script, count) = if kana > 0 {
            let han = hist.get(&Script::Han).unwrap_or(&0);
            (Script::Hiragana, kana + han)
        } else {
            hist.iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.full_name().cmp(a.0.full_name())))
                .map(|(s, c)| (*s, *c))
                .unwrap_or((Script::Unknown, 0))
        };
        let share = count as f64 / letters as f64;

        let words: Vec<String> = sentence
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| !is_letter(c)).to_lowercase())
            .collect();
        let mut best: Option<(&LangCode, usize)> = None;
        for (lang, s, list) in &self.stopwords {
            if *s != script {
                continue;
            }
            let hits = words.iter().filter(|w| list.contains(&w.as_str())).count();
            if hits > 0 && best.map_or(true, |(_, b)| hits > b) {
                best = Some((lang, hits));
            }
        }
        if let Some((lang, hits)) = best {
            let evidence = (hits as f64 / words.len().max(1) as f64).min(1.0);
            return LangPrediction {
                lang: lang.clone(),
                confidence: share * (0.5 + 0.5 * evidence),
            };
        }
        match self.by_script.get(script.full_name()) {
            Some(lang) => LangPrediction { lang: lang.clone(), confidence: share * 0.5 },
            None => LangPrediction { lang: self.none.clone(), confidence: 0.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::split_sentences;

    fn pred(code: &str, conf: f64) -> LangPrediction {
        LangPrediction { lang: normalize_lang_code(code).unwrap(), confidence: conf }
    }

    #[test]
    fn vote() {
        let all_en: Vec<_> = (0..5).map(|_| pred("en", 0.9)).collect();
        assert_eq!(majority_vote(&all_en).unwrap().code, "en");
        let v = [pred("en", 0.5), pred("en", 0.5), pred("en", 0.5), pred("fr", 1.0), pred("fr", 1.0)];
        assert_eq!(majority_vote(&v).unwrap().code, "en");
        let v = [pred("en", 0.9), pred("fr", 0.7), pred("en", 0.8), pred("fr", 0.7)];
        assert_eq!(majority_vote(&v).unwrap().code, "en");
        let v = [pred("fr", 0.5), pred("en", 0.5)];
        assert_eq!(majority_vote(&v).unwrap().code, "en");
        assert!(matches!(majority_vote(&[]), Err(Error::UndefinedLanguage)));
    }

    #[test]
    fn stub_predictions() {
        let p = ScriptStubPredictor::default();
        assert_eq!(p.predict("The cat is on the mat").lang.code, "en");
        assert_eq!(p.predict("Le chat est sur la table").lang.code, "fr");
        assert_eq!(p.predict("Это не так").lang.code, "ru");
        assert_eq!(p.predict("これは日本語です").lang.code, "ja");
        assert_eq!(p.predict("这是中文").lang.code, "zh");
        assert_eq!(p.predict("한국어 문장").lang.code, "ko");
        assert_eq!(p.predict("తెలుగు వాక్యం").lang.code, "te");
        assert_eq!(p.predict("12 34").lang.code, "zxx");
        let c = p.predict("The cat").confidence;
        assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn document_label() {
        let doc = Document::from_text("d", "fr", "The cat is here. The dog is there. Le chat est là.").unwrap();
        let mut doc = split_sentences(doc);
        let lang = predict_document_lang(&mut doc, &ScriptStubPredictor::default()).unwrap();
        assert_eq!(lang.code, "en");
        assert!(doc.sentences.iter().all(|s| s.predicted_lang.is_some()));
        let mut empty = Document::from_text("e", "en", "").unwrap();
        assert!(predict_document_lang(&mut empty, &ScriptStubPredictor::default()).is_err());
    }
}
