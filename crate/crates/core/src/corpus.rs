//! Documents, sentences, splitting and JSON Lines I/O.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{normalize_lang_code, LangCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub predicted_lang: Option<LangCode>,
    pub flags: BTreeSet<String>,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        Sentence {
            text: text.into(),
            predicted_lang: None,
            flags: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub lang: LangCode,
    pub lines: Vec<String>,
    pub sentences: Vec<Sentence>,
    pub source_url: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, lang: LangCode, lines: Vec<String>) -> Self {
        Document {
            id: id.into(),
            lang,
            lines,
            sentences: Vec::new(),
            source_url: None,
        }
    }

    /// Build from raw text; lines split on `\n`.
    pub fn from_text(id: impl Into<String>, lang: &str, text: &str) -> Result<Self> {
        Ok(Document::new(
            id,
            normalize_lang_code(lang)?,
            text.split('\n').map(str::to_string).collect(),
        ))
    }

    pub fn text(&self) -> String {
        self.lines.join("\n")
    }

    pub fn is_empty(&self) -> bool {
        self.lines.iter().all(|l| l.trim().is_empty())
    }
}

/// On-disk record: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRecord {
    pub id: String,
    pub lang: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl TryFrom<DocRecord> for Document {
    type Error = Error;
    fn try_from(r: DocRecord) -> Result<Self> {
        let mut doc = Document::from_text(r.id, &r.lang, &r.text)?;
        doc.source_url = r.url;
        Ok(doc)
    }
}

impl From<&Document> for DocRecord {
    fn from(d: &Document) -> Self {
        DocRecord {
            id: d.id.clone(),
            lang: d.lang.code.clone(),
            text: d.text(),
            url: d.source_url.clone(),
        }
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        docs.push(Document::try_from(rec).map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?);
    }
    Ok(docs)
}

pub fn write_jsonl<W: Write>(mut w: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut w, &DocRecord::from(d))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn is_ideographic_stop(c: char) -> bool {
    matches!(c, '。' | '！' | '？' | '｡')
}

fn is_spaced_stop(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '।' | '॥')
}

fn is_closer(c: char) -> bool {
    matches!(c, '」' | '』' | '）' | '】' | '”' | '’' | '》')
}

/// Split one line into sentences.
pub fn split_line(line: &str) -> Vec<String> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut end = None;
        if is_ideographic_stop(c) {
            let mut j = i + 1;
            while j < chars.len() && (is_ideographic_stop(chars[j]) || is_closer(chars[j])) {
                j += 1;
            }
            end = Some(j);
        } else if is_spaced_stop(c) && chars.get(i + 1).map_or(true, |n| n.is_whitespace()) {
            end = Some(i + 1);
        }
        if let Some(j) = end {
            push_trimmed(&mut out, &chars[start..j]);
            start = j;
            i = j;
        } else {
            i += 1;
        }
    }
    push_trimmed(&mut out, &chars[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, chars: &[char]) {
    let s: String = chars.iter().collect();
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

/// Populate `doc.sentences` from its lines.
pub fn split_sentences(mut doc: Document) -> Document {
    doc.sentences = doc
        .lines
        .iter()
        .flat_map(|l| split_line(l))
        .map(Sentence::new)
        .collect();
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn split(lines: &[&str]) -> Vec<String> {
        let doc = Document::new(
            "d",
            normalize_lang_code("en").unwrap(),
            lines.iter().map(|s| s.to_string()).collect(),
        );
        split_sentences(doc).sentences.into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn basic_split() {
        assert_eq!(split(&["Hello. World."]), vec!["Hello.", "World."]);
        assert!(split(&[""]).is_empty());
        assert_eq!(split(&["一行。二行。"]), vec!["一行。", "二行。"]);
        assert_eq!(split(&["यह है। वह है।"]), vec!["यह है।", "वह है।"]);
        assert_eq!(split(&["v1.2 is out! Yes?"]), vec!["v1.2 is out!", "Yes?"]);
        assert_eq!(split(&["a", "b. c"]), vec!["a", "b.", "c"]);
    }

    #[test]
    fn jsonl_round_trip() {
        let input = "{\"id\":\"1\",\"lang\":\"tl\",\"text\":\"a\\nb\",\"url\":\"http://x\"}\n";
        let docs = read_jsonl(input.as_bytes()).unwrap();
        assert_eq!(docs[0].lang.code, "fil");
        assert_eq!(docs[0].lines, vec!["a", "b"]);
        let mut out = Vec::new();
        write_jsonl(&mut out, &docs).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "{\"id\":\"1\",\"lang\":\"fil\",\"text\":\"a\\nb\",\"url\":\"http://x\"}\n"
        );
    }

    #[test]
    fn bad_record_is_data_error() {
        let err = read_jsonl("{\"id\":1}\n".as_bytes()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    proptest! {
        #[test]
        fn split_drops_only_whitespace(line in "[a-zA-Z .!?。।\t]{0,60}") {
            let got = split(&[&line]);
            let mut a: Vec<char> = line.chars().filter(|c| !c.is_whitespace()).collect();
            let mut b: Vec<char> = got.concat().chars().filter(|c| !c.is_whitespace()).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            for s in &got {
                prop_assert!(!s.contains('\n'));
            }
        }
    }
}
