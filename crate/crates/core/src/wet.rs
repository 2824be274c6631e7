//! Import of WET-style crawl extracts into document records.

use std::io::{BufRead, BufReader, Read};

use crate::corpus::{split_sentences, DocRecord, Document};
use crate::error::{Error, Result};
use crate::lang::normalize_lang_code;
use crate::langid::{predict_document_lang, LangIdPredictor};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WetRecord {
    pub record_id: Option<String>,
    pub url: Option<String>,
    pub languages: Option<String>,
    pub text: String,
}

fn header<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(name))
        .map(|(_, v)| v.as_str())
}

/// Parse `conversion` records; other record types are skipped.
pub fn read_wet<R: Read>(reader: R) -> Result<Vec<WetRecord>> {
    let mut r = BufReader::new(reader);
    let mut out = Vec::new();
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(out);
        }
        if !line.starts_with("WARC/") {
            continue;
        }
        let mut headers = Vec::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Data("truncated WARC header".into()));
            }
            let l = line.trim_end_matches(['\r', '\n']);
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                headers.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let len: usize = header(&headers, "Content-Length")
            .ok_or_else(|| Error::Data("WARC record without Content-Length".into()))?
            .parse()
            .map_err(|e| Error::Data(format!("bad Content-Length: {e}")))?;
        let mut body = vec![0u8; len];
        r.read_exact(&mut body)?;
        if header(&headers, "WARC-Type") != Some("conversion") {
            continue;
        }
        let text = String::from_utf8(body).map_err(|e| Error::Data(format!("record is not UTF-8: {e}")))?;
        out.push(WetRecord {
            record_id: header(&headers, "WARC-Record-ID").map(|s| s.trim_matches(['<', '>']).to_string()),
            url: header(&headers, "WARC-Target-URI").map(str::to_string),
            languages: header(&headers, "WARC-Identified-Content-Language").map(str::to_string),
            text: text.trim_end_matches(['\r', '\n']).replace("\r\n", "\n"),
        });
    }
}

/// Convert records to documents. The label comes from `lang` when given,
/// else the first identified language in the record header, else the
/// sentence-level majority vote.
pub fn to_records(records: Vec<WetRecord>, lang: Option<&str>, predictor: &dyn LangIdPredictor) -> Result<Vec<DocRecord>> {
    let mut out = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        let id = rec.record_id.clone().unwrap_or_else(|| format!("wet-{i:08}"));
        let label = match (lang, rec.languages.as_deref().and_then(|l| l.split(',').next())) {
            (Some(l), _) => normalize_lang_code(l)?.code,
            (None, Some(l)) => normalize_lang_code(l)?.code,
            (None, None) => {
                let mut doc = split_sentences(Document::from_text(&id, "und", &rec.text)?);
                match predict_document_lang(&mut doc, predictor) {
                    Ok(l) => l.code,
                    Err(_) => continue,
                }
            }
        };
        out.push(DocRecord { id, lang: label, text: rec.text, url: rec.url });
    }
    Ok(out)
}
