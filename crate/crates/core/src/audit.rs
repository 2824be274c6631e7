//! Human self-audit: verdict types, the decisions export consumed by the
//! pipeline gate, and the HTTP service auditors work against.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::canary::rng_for;
use crate::corpus::{DocRecord, Document};
use crate::error::{Error, Result};
use crate::lang::normalize_lang_code;

pub const MAX_SAMPLE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Keep,
    FilterNote,
    Remove,
    Rename,
    Merge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Issue {
    Bible,
    Jw,
    Lds,
    Virama,
    ShortDocs,
    Noise,
    Porn,
    Boilerplate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditVerdict {
    pub lang: String,
    pub decision: Decision,
    /// New code for rename and merge decisions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub issues: Vec<Issue>,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub auditor: String,
    /// Unix seconds; filled in by the service when absent.
    #[serde(default)]
    pub timestamp: Option<u64>,
}

impl AuditVerdict {
    /// Normalize codes and check that rename/merge carry a target.
    pub fn validate(mut self) -> Result<Self> {
        self.lang = normalize_lang_code(&self.lang)?.code;
        match (self.decision, &self.target) {
            (Decision::Rename | Decision::Merge, Some(t)) => self.target = Some(normalize_lang_code(t)?.code),
            (Decision::Rename | Decision::Merge, None) => {
                return Err(Error::InvalidParameter(format!("{:?} needs a target code", self.decision)))
            }
            (_, Some(_)) => return Err(Error::InvalidParameter("only rename and merge take a target".into())),
            (_, None) => {}
        }
        self.issues.sort();
        self.issues.dedup();
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedDecision {
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub issues: Vec<Issue>,
    #[serde(default)]
    pub notes: String,
}

pub type AuditDecisions = BTreeMap<String, ExportedDecision>;

/// Latest verdict per language wins.
pub fn export_decisions(verdicts: &[AuditVerdict]) -> AuditDecisions {
    verdicts
        .iter()
        .map(|v| {
            let d = ExportedDecision {
                decision: v.decision,
                target: v.target.clone(),
                issues: v.issues.clone(),
                notes: v.notes.clone(),
            };
            (v.lang.clone(), d)
        })
        .collect()
}

pub fn load_decisions(path: &Path) -> Result<AuditDecisions> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("audit decisions {}: {e}", path.display())))?;
    let raw: AuditDecisions = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("audit decisions {}: {e}", path.display())))?;
    let mut out = AuditDecisions::new();
    for (lang, d) in raw {
        let v = AuditVerdict {
            lang,
            decision: d.decision,
            target: d.target,
            issues: d.issues,
            notes: d.notes,
            auditor: String::new(),
            timestamp: None,
        }
        .validate()
        .map_err(|e| Error::Config(format!("audit decisions: {e}")))?;
        out.extend(export_decisions(&[v]));
    }
    Ok(out)
}

pub const GUIDELINES: &str = "\
Audit guidelines

Each language is judged from a random sample of up to 20 documents.

- Confirm that the documents are mostly in the labeled language. If most of
  them are in a different language, rename the code to the right one, or
  merge it into that language's existing code.
- If the sample is dominated by noise, boilerplate, pornography or text in
  the wrong language, and no simple rule would rescue it, remove the language.
- If the problems follow a recognizable pattern (for example religious texts,
  detached virama marks, or very short documents), keep the language and
  describe the filter to apply in the notes field, using decision filter-note.
- Otherwise keep the language.
- Tag every issue you saw, even when the decision is keep.
";

/// Read-only view of the corpus being audited.
#[derive(Debug, Default)]
pub struct CorpusIndex {
    by_lang: BTreeMap<String, Vec<usize>>,
    by_id: BTreeMap<String, usize>,
    docs: Vec<DocRecord>,
}

impl CorpusIndex {
    pub fn new(docs: &[Document]) -> Self {
        let mut idx = CorpusIndex::default();
        for d in docs {
            let i = idx.docs.len();
            idx.by_lang.entry(d.lang.code.clone()).or_default().push(i);
            idx.by_id.insert(d.id.clone(), i);
            idx.docs.push(DocRecord::from(d));
        }
        idx
    }

    pub fn languages(&self) -> impl Iterator<Item = (&str, usize)> {
        self.by_lang.iter().map(|(l, v)| (l.as_str(), v.len()))
    }

    pub fn has_lang(&self, lang: &str) -> bool {
        self.by_lang.contains_key(lang)
    }

    /// Seeded uniform sample without replacement, in corpus order.
    pub fn sample(&self, lang: &str, n: usize, seed: u64) -> Option<Vec<&DocRecord>> {
        let ids = self.by_lang.get(lang)?;
        let mut rng = rng_for(seed, &format!("audit/{lang}"));
        let mut picked = index::sample(&mut rng, ids.len(), n.min(MAX_SAMPLE).min(ids.len())).into_vec();
        picked.sort_unstable();
        Some(picked.into_iter().map(|k| &self.docs[ids[k]]).collect())
    }

    pub fn doc(&self, id: &str) -> Option<&DocRecord> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }
}

/// Append-only verdict log. Writes go through one lock; readers take a
/// snapshot of the current list.
#[derive(Debug)]
pub struct VerdictLog {
    file: Mutex<Option<File>>,
    snapshot: RwLock<Arc<Vec<AuditVerdict>>>,
}

impl VerdictLog {
    pub fn in_memory() -> Self {
        VerdictLog { file: Mutex::new(None), snapshot: RwLock::new(Arc::new(Vec::new())) }
    }

    /// Open (or create) a JSON Lines log, replaying existing verdicts.
    pub fn open(path: &Path) -> Result<Self> {
        let mut existing = Vec::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let v: AuditVerdict = serde_json::from_str(&line)
                    .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
                existing.push(v);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(VerdictLog { file: Mutex::new(Some(file)), snapshot: RwLock::new(Arc::new(existing)) })
    }

    pub fn snapshot(&self) -> Arc<Vec<AuditVerdict>> {
        self.snapshot.read().expect("verdict snapshot").clone()
    }

    /// Persist a verdict and return its id.
    pub fn append(&self, v: AuditVerdict) -> Result<String> {
        let mut file = self.file.lock().expect("verdict log");
        if let Some(f) = file.as_mut() {
            let mut line = serde_json::to_vec(&v)?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.flush()?;
        }
        let mut snap = self.snapshot.write().expect("verdict snapshot");
        let mut next = Vec::clone(&snap);
        next.push(v);
        let id = format!("v{:06}", next.len());
        *snap = Arc::new(next);
        Ok(id)
    }
}

pub struct AuditState {
    pub index: CorpusIndex,
    pub log: VerdictLog,
}

type Shared = Arc<AuditState>;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct LanguageEntry {
    pub lang: String,
    pub doc_count: usize,
    pub audited: bool,
    pub decision: Option<Decision>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AuditSample {
    pub lang: String,
    pub documents: Vec<DocRecord>,
    pub sample_seed: u64,
}

#[derive(Deserialize)]
struct SampleQuery {
    lang: String,
    n: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct DocQuery {
    id: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": msg.into() }))).into_response()
}

async fn languages(State(s): State<Shared>) -> Json<Vec<LanguageEntry>> {
    let decisions = export_decisions(&s.log.snapshot());
    let mut out: Vec<LanguageEntry> = s
        .index
        .languages()
        .map(|(lang, doc_count)| LanguageEntry {
            lang: lang.to_string(),
            doc_count,
            audited: decisions.contains_key(lang),
            decision: decisions.get(lang).map(|d| d.decision),
        })
        .collect();
    out.sort_by(|a, b| b.doc_count.cmp(&a.doc_count).then_with(|| a.lang.cmp(&b.lang)));
    Json(out)
}

async fn sample(State(s): State<Shared>, Query(q): Query<SampleQuery>) -> Response {
    let lang = match normalize_lang_code(&q.lang) {
        Ok(l) => l.code,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let seed = q.seed.unwrap_or(0);
    match s.index.sample(&lang, q.n.unwrap_or(MAX_SAMPLE), seed) {
        Some(docs) => Json(AuditSample { lang, documents: docs.into_iter().cloned().collect(), sample_seed: seed }).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown language {lang}")),
    }
}

async fn verdict(State(s): State<Shared>, body: String) -> Response {
    let v: AuditVerdict = match serde_json::from_str(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let mut v = match v.validate() {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    if !s.index.has_lang(&v.lang) {
        return error(StatusCode::NOT_FOUND, format!("unknown language {}", v.lang));
    }
    if v.timestamp.is_none() {
        v.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    match s.log.append(v) {
        Ok(id) => (StatusCode::CREATED, Json(serde_json::json!({ "id": id }))).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn export(State(s): State<Shared>) -> Json<AuditDecisions> {
    Json(export_decisions(&s.log.snapshot()))
}

async fn doc(State(s): State<Shared>, Query(q): Query<DocQuery>) -> Response {
    match s.index.doc(&q.id) {
        Some(d) => Json(d.clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown document {}", q.id)),
    }
}

async fn guidelines() -> Response {
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], GUIDELINES).into_response()
}

pub fn router(state: Arc<AuditState>) -> Router {
    Router::new()
        .route("/languages", get(languages))
        .route("/sample", get(sample))
        .route("/verdict", post(verdict))
        .route("/export", get(export))
        .route("/doc", get(doc))
        .route("/guidelines", get(guidelines))
        .with_state(state)
}

/// Serve on an already-bound listener until the process exits.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AuditState>) -> Result<()> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}

/// Build the index, bind `addr` and serve, blocking the current thread.
/// `on_bound` receives the actual address (useful with port 0).
pub fn run(
    addr: SocketAddr,
    docs: &[Document],
    log_path: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<()> {
    let log = match log_path {
        Some(p) => VerdictLog::open(&p)?,
        None => VerdictLog::in_memory(),
    };
    let state = Arc::new(AuditState { index: CorpusIndex::new(docs), log });
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        on_bound(listener.local_addr()?);
        serve(listener, state).await
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(lang: &str, d: Decision, target: Option<&str>) -> AuditVerdict {
        AuditVerdict {
            lang: lang.into(),
            decision: d,
            target: target.map(str::to_string),
            issues: vec![],
            notes: String::new(),
            auditor: "t".into(),
            timestamp: None,
        }
    }

    #[test]
    fn validation() {
        assert!(verdict("en", Decision::Rename, None).validate().is_err());
        assert!(verdict("en", Decision::Keep, Some("fr")).validate().is_err());
        let v = verdict("dty", Decision::Rename, Some("zxx-xx-dtynoise")).validate().unwrap();
        assert_eq!(v.target.as_deref(), Some("zxx-xx-dtynoise"));
        let json = r#"{"lang":"en","decision":"filter-note","issues":["bible","short_docs"]}"#;
        let v: AuditVerdict = serde_json::from_str(json).unwrap();
        assert_eq!(v.decision, Decision::FilterNote);
        assert!(serde_json::from_str::<AuditVerdict>(r#"{"lang":"en","decision":"drop"}"#).is_err());
        assert!(serde_json::from_str::<AuditVerdict>(r#"{"lang":"en","decision":"keep","issues":["spam"]}"#).is_err());
    }

    #[test]
    fn last_verdict_wins() {
        let e = export_decisions(&[verdict("en", Decision::Remove, None), verdict("en", Decision::Keep, None)]);
        assert_eq!(e["en"].decision, Decision::Keep);
        assert!(export_decisions(&[]).is_empty());
    }

    #[test]
    fn log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let log = VerdictLog::open(&path).unwrap();
        assert_eq!(log.append(verdict("en", Decision::Remove, None)).unwrap(), "v000001");
        drop(log);
        let log = VerdictLog::open(&path).unwrap();
        assert_eq!(log.snapshot().len(), 1);
        assert_eq!(log.append(verdict("fr", Decision::Keep, None)).unwrap(), "v000002");
    }

    #[test]
    fn sampling() {
        let docs: Vec<Document> = (0..1000)
            .map(|i| Document::from_text(format!("d{i}"), if i < 7 { "fr" } else { "en" }, "x").unwrap())
            .collect();
        let idx = CorpusIndex::new(&docs);
        assert_eq!(idx.sample("fr", 20, 1).unwrap().len(), 7);
        let a: Vec<_> = idx.sample("en", 20, 1).unwrap().iter().map(|d| d.id.clone()).collect();
        let b: Vec<_> = idx.sample("en", 20, 1).unwrap().iter().map(|d| d.id.clone()).collect();
        let c: Vec<_> = idx.sample("en", 20, 2).unwrap().iter().map(|d| d.id.clone()).collect();
        assert_eq!(a.len(), 20);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(idx.sample("de", 20, 1).is_none());
    }
}
