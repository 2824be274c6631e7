//! Language tags: normalization to the corpus convention and per-language
//! lookup tables (expected scripts, English display names).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use unicode_script::Script;

use crate::error::{Error, Result};

const LANG_SCRIPTS: &str = include_str!("../data/lang_scripts.tsv");
const LANG_NAMES: &str = include_str!("../data/lang_names.tsv");

/// Source-convention codes rewritten to the corpus convention, plus
/// audited renames and merges. Keys are lowercase with `-` separators.
const RENAMES: &[(&str, &str)] = &[
    ("tl", "fil"),
    ("tw", "ak"),
    ("nb", "no"),
    ("pbt", "ps"),
    ("zlm", "ms"),
    ("dty", "zxx-xx-dtynoise"),
    ("fan", "bum"),
    ("cjk", "gil"),
    ("bjj", "awa"),
    ("ss-sz", "ss"),
];

/// Three-letter codes that have a two-letter equivalent.
const ISO3_TO_ISO1: &[(&str, &str)] = &[
    ("amh", "am"),
    ("ara", "ar"),
    ("ben", "bn"),
    ("bul", "bg"),
    ("ces", "cs"),
    ("cym", "cy"),
    ("dan", "da"),
    ("deu", "de"),
    ("ell", "el"),
    ("eng", "en"),
    ("est", "et"),
    ("fas", "fa"),
    ("fin", "fi"),
    ("fra", "fr"),
    ("guj", "gu"),
    ("heb", "he"),
    ("hin", "hi"),
    ("hun", "hu"),
    ("ind", "id"),
    ("ita", "it"),
    ("jpn", "ja"),
    ("kan", "kn"),
    ("kor", "ko"),
    ("lit", "lt"),
    ("mal", "ml"),
    ("mar", "mr"),
    ("mya", "my"),
    ("nep", "ne"),
    ("nld", "nl"),
    ("nor", "no"),
    ("pan", "pa"),
    ("pol", "pl"),
    ("por", "pt"),
    ("ron", "ro"),
    ("rus", "ru"),
    ("slk", "sk"),
    ("spa", "es"),
    ("swa", "sw"),
    ("swe", "sv"),
    ("tam", "ta"),
    ("tel", "te"),
    ("tha", "th"),
    ("tur", "tr"),
    ("ukr", "uk"),
    ("urd", "ur"),
    ("vie", "vi"),
    ("zho", "zh"),
];

/// A normalized language tag.
///
/// `code` is the full canonical tag (`fil`, `ks_Deva`, `zh_TW`,
/// `zxx-xx-dtynoise`). Unknown base languages are kept lowercased with
/// `unmapped` set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LangCode {
    pub code: String,
    pub script_suffix: Option<String>,
    pub unmapped: bool,
}

impl LangCode {
    pub fn as_str(&self) -> &str {
        &self.code
    }

    /// Base subtag, without script or region.
    pub fn base(&self) -> &str {
        self.code.split(['_', '-']).next().unwrap_or(&self.code)
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

impl Serialize for LangCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.code)
    }
}

impl<'de> Deserialize<'de> for LangCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        normalize_lang_code(&raw).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for LangCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        normalize_lang_code(s)
    }
}

/// Normalize a raw tag from any source convention to the corpus convention.
pub fn normalize_lang_code(raw: &str) -> Result<LangCode> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidCode(raw.to_string()));
    }
    let key = trimmed.to_lowercase().replace('_', "-");
    if key.split('-').any(str::is_empty) {
        return Err(Error::InvalidCode(raw.to_string()));
    }

    let key = match RENAMES.iter().find(|(from, _)| *from == key) {
        // Rename targets are canonical as written.
        Some((_, to)) => return Ok(fixed(to)),
        None => key,
    };
    if RENAMES.iter().any(|(_, to)| *to == key) {
        return Ok(fixed(&key));
    }

    let mut parts = key.split('-');
    let mut base = parts.next().unwrap_or_default().to_string();
    if let Some((_, two)) = ISO3_TO_ISO1.iter().find(|(three, _)| *three == base) {
        base = two.to_string();
    }
    let rest: Vec<&str> = parts.collect();

    let tables = LangTables::global();
    if !tables.scripts.contains_key(&base) {
        let mut code = base;
        for p in &rest {
            code.push('_');
            code.push_str(p);
        }
        return Ok(LangCode {
            code,
            script_suffix: None,
            unmapped: true,
        });
    }

    let default_script = tables.scripts.get(&base).and_then(|s| s.first().copied());
    let mut code = base;
    let mut script_suffix = None;
    for p in rest {
        let sub = if p.len() == 4 && p.chars().all(|c| c.is_ascii_alphabetic()) {
            let titled = titlecase(p);
            let is_default = default_script
                .map(|s| s.short_name() == titled)
                .unwrap_or(false);
            if is_default {
                continue;
            }
            script_suffix = Some(titled.clone());
            titled
        } else if p.len() == 2 && p.chars().all(|c| c.is_ascii_alphabetic()) {
            p.to_ascii_uppercase()
        } else {
            p.to_string()
        };
        code.push('_');
        code.push_str(&sub);
    }
    Ok(LangCode {
        code,
        script_suffix,
        unmapped: false,
    })
}

fn fixed(code: &str) -> LangCode {
    LangCode {
        code: code.to_string(),
        script_suffix: None,
        unmapped: false,
    }
}

fn titlecase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for (i, c) in s.chars().enumerate() {
        if i == 0 {
            out.push(c.to_ascii_uppercase());
        } else {
            out.push(c.to_ascii_lowercase());
        }
    }
    out
}

/// Resolve a four-letter script subtag to a Unicode script.
pub fn script_from_subtag(tag: &str) -> Option<Script> {
    match tag {
        "Hant" | "Hans" => Some(Script::Han),
        "Jpan" => Some(Script::Han),
        "Kore" => Some(Script::Hangul),
        _ => Script::from_short_name(tag),
    }
}

/// Lookup tables keyed by base language code.
#[derive(Debug, Clone, Default)]
pub struct LangTables {
    pub scripts: BTreeMap<String, Vec<Script>>,
    pub names: BTreeMap<String, String>,
}

impl LangTables {
    pub fn global() -> &'static LangTables {
        static TABLES: OnceLock<LangTables> = OnceLock::new();
        TABLES.get_or_init(|| {
            LangTables::parse(LANG_SCRIPTS, LANG_NAMES).expect("bundled language tables")
        })
    }

    pub fn parse(scripts_tsv: &str, names_tsv: &str) -> Result<Self> {
        let mut scripts = BTreeMap::new();
        for (code, value) in tsv_rows(scripts_tsv) {
            let list = value
                .split(',')
                .map(|name| {
                    Script::from_full_name(name.trim())
                        .ok_or_else(|| Error::Data(format!("unknown script {name:?} for {code}")))
                })
                .collect::<Result<Vec<_>>>()?;
            scripts.insert(code.to_string(), list);
        }
        let names = tsv_rows(names_tsv)
            .map(|(c, n)| (c.to_string(), n.to_string()))
            .collect();
        Ok(LangTables { scripts, names })
    }

    /// Expected scripts for a language; an explicit script subtag wins.
    pub fn expected_scripts(&self, lang: &LangCode) -> Option<Vec<Script>> {
        if let Some(s) = lang.script_suffix.as_deref().and_then(script_from_subtag) {
            return Some(vec![s]);
        }
        self.scripts
            .get(lang.as_str())
            .or_else(|| self.scripts.get(lang.base()))
            .cloned()
    }

    /// English display name, falling back to the code itself.
    pub fn name<'a>(&'a self, lang: &'a LangCode) -> &'a str {
        self.names
            .get(lang.as_str())
            .or_else(|| self.names.get(lang.base()))
            .map(String::as_str)
            .unwrap_or(lang.as_str())
    }
}

fn tsv_rows(text: &str) -> impl Iterator<Item = (&str, &str)> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(s: &str) -> String {
        normalize_lang_code(s).unwrap().code
    }

    #[test]
    fn conventions_and_renames() {
        assert_eq!(norm("tl"), "fil");
        assert_eq!(norm("en"), "en");
        assert_eq!(norm("dty"), "zxx-xx-dtynoise");
        assert_eq!(norm("ss-SZ"), "ss");
        assert_eq!(norm("ss_SZ"), "ss");
        assert_eq!(norm("tw"), "ak");
        assert_eq!(norm("nb"), "no");
        assert_eq!(norm("pbt"), "ps");
        assert_eq!(norm("zlm"), "ms");
        assert_eq!(norm("fan"), "bum");
        assert_eq!(norm("cjk"), "gil");
        assert_eq!(norm("bjj"), "awa");
        assert_eq!(norm("ENG"), "en");
    }

    #[test]
    fn subtags() {
        let ks = normalize_lang_code("ks-deva").unwrap();
        assert_eq!(ks.code, "ks_Deva");
        assert_eq!(ks.script_suffix.as_deref(), Some("Deva"));
        assert_eq!(norm("zh-tw"), "zh_TW");
        assert_eq!(norm("hi_Deva"), "hi");
    }

    #[test]
    fn unknown_passes_through() {
        let c = normalize_lang_code("XyZ-Foo").unwrap();
        assert!(c.unmapped);
        assert_eq!(c.code, "xyz_foo");
        assert_eq!(normalize_lang_code(&c.code).unwrap(), c);
    }

    #[test]
    fn empty_is_error() {
        assert!(normalize_lang_code("").is_err());
        assert!(normalize_lang_code("  ").is_err());
        assert!(normalize_lang_code("en--x").is_err());
    }

    #[test]
    fn tables_load() {
        let t = LangTables::global();
        let kaa = normalize_lang_code("kaa").unwrap();
        assert_eq!(t.expected_scripts(&kaa), Some(vec![Script::Cyrillic]));
        let kr = normalize_lang_code("kr_Arab").unwrap();
        assert_eq!(t.expected_scripts(&kr), Some(vec![Script::Arabic]));
        assert_eq!(t.name(&normalize_lang_code("te").unwrap()), "Telugu");
    }

    proptest::proptest! {
        #[test]
        fn idempotent(raw in "[A-Za-z]{1,4}([-_][A-Za-z0-9]{1,8}){0,2}") {
            let once = normalize_lang_code(&raw).unwrap();
            let twice = normalize_lang_code(&once.code).unwrap();
            proptest::prop_assert_eq!(once, twice);
        }
    }
}
