//! Monolingual cleaning pipeline: configuration, stage graph, sharded
//! execution and published output.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{load_decisions, AuditDecisions, Decision};
use crate::corpus::{read_jsonl, split_sentences, write_jsonl, Document};
use crate::error::{Error, Result};
use crate::lang::normalize_lang_code;
use crate::langid::{predict_document_lang, LangIdPredictor, ScriptStubPredictor};
use crate::mono::{
    clean_gate, dedup_lines_sharded, prelim_page_filter, CursedPatterns, GateParams, PrelimParams, QuestionableScorer,
    ScorerParams,
};
use crate::report::{FilterReport, Outcome};
use crate::script::{
    fix_virama_doc, maybe_convert_zawgyi, zh_blocklist_filter, BigramDetector, IdentityConverter, RuleConverter,
    ViramaConfig, ZawgyiConverter, ZhBlocklist,
};
use crate::stats::{compute_stats, CorpusStats};
use crate::tokenize::Whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    DedupLines,
    PrelimPageFilter,
    Virama,
    Zawgyi,
    ZhBlocklist,
    Langid,
    Questionable,
    AuditGate,
    DropTiny,
}

impl Stage {
    pub const DEFAULT_ORDER: [Stage; 9] = [
        Stage::DedupLines,
        Stage::PrelimPageFilter,
        Stage::Virama,
        Stage::Zawgyi,
        Stage::ZhBlocklist,
        Stage::Langid,
        Stage::Questionable,
        Stage::AuditGate,
        Stage::DropTiny,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::DedupLines => "dedup_lines",
            Stage::PrelimPageFilter => "prelim_page_filter",
            Stage::Virama => "virama",
            Stage::Zawgyi => "zawgyi",
            Stage::ZhBlocklist => "zh_blocklist",
            Stage::Langid => "langid",
            Stage::Questionable => "questionable",
            Stage::AuditGate => "audit_gate",
            Stage::DropTiny => "drop_tiny",
        }
    }

    /// Stages that need to see every shard at once.
    pub fn is_global(self) -> bool {
        matches!(self, Stage::DedupLines | Stage::DropTiny)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConverterKind {
    #[default]
    Rules,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageParams {
    pub prelim: PrelimParams,
    pub scorer: ScorerParams,
    pub gate: GateParams,
    pub zawgyi_threshold: f64,
    pub zawgyi_converter: ConverterKind,
    /// Replace each document's label with the sentence majority vote.
    pub langid_relabel: bool,
    /// Drop languages without an audit verdict.
    pub audit_require_verdict: bool,
    /// Languages with fewer documents than this are removed.
    pub min_docs: usize,
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams {
            prelim: PrelimParams::default(),
            scorer: ScorerParams::default(),
            gate: GateParams::default(),
            zawgyi_threshold: 0.5,
            zawgyi_converter: ConverterKind::Rules,
            langid_relabel: false,
            audit_require_verdict: false,
            min_docs: 20,
        }
    }
}

/// Optional overrides for the bundled data files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub cursed_patterns: Option<PathBuf>,
    pub virama_chars: Option<PathBuf>,
    pub virama_langs: Option<PathBuf>,
    pub zh_blocklist: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub shards: usize,
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub params: StageParams,
    pub data: DataPaths,
    pub audit_decisions: Option<PathBuf>,
    pub docs_per_file: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::new(),
            output: PathBuf::new(),
            shards: 1,
            seed: 0,
            stages: Stage::DEFAULT_ORDER.to_vec(),
            params: StageParams::default(),
            data: DataPaths::default(),
            audit_decisions: None,
            docs_per_file: 10_000,
        }
    }
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be in [{lo}, {hi}], got {v}")))
    }
}

impl PipelineConfig {
    /// Load JSON, or TOML when the file name ends in `.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: PipelineConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if self.shards == 0 {
            return Err(Error::Config("shards must be at least 1".into()));
        }
        if self.docs_per_file == 0 {
            return Err(Error::Config("docs_per_file must be at least 1".into()));
        }
        check_range("params.gate.max_questionable", p.gate.max_questionable, 0.0, 1.0)?;
        check_range("params.zawgyi_threshold", p.zawgyi_threshold, 0.0, 1.0)?;
        check_range("params.scorer.list_case_ratio", p.scorer.list_case_ratio, 0.0, 1.0)?;
        check_range("params.scorer.technical_ratio", p.scorer.technical_ratio, 0.0, 1.0)?;
        if p.scorer.min_chars > p.scorer.max_chars {
            return Err(Error::Config("params.scorer.min_chars exceeds max_chars".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.stages {
            if !seen.insert(s.name()) {
                return Err(Error::Config(format!("stage {} listed twice", s.name())));
            }
        }
        let files = [
            &self.data.cursed_patterns,
            &self.data.virama_chars,
            &self.data.virama_langs,
            &self.data.zh_blocklist,
            &self.audit_decisions,
        ];
        for f in files.into_iter().flatten() {
            if !f.is_file() {
                return Err(Error::Config(format!("data file {} does not exist", f.display())));
            }
        }
        if self.data.virama_chars.is_some() != self.data.virama_langs.is_some() {
            return Err(Error::Config("virama_chars and virama_langs must be given together".into()));
        }
        Ok(())
    }
}

/// Everything the stages need, loaded once.
pub struct StageContext {
    pub params: StageParams,
    pub scorer: QuestionableScorer,
    pub virama: ViramaConfig,
    pub zh: ZhBlocklist,
    pub decisions: Option<AuditDecisions>,
    pub predictor: Box<dyn LangIdPredictor>,
    pub converter: Box<dyn ZawgyiConverter>,
}

impl StageContext {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let as_config = |e: Error| Error::Config(e.to_string());
        let cursed = match &cfg.data.cursed_patterns {
            Some(p) => CursedPatterns::load(p).map_err(as_config)?,
            None => CursedPatterns::default(),
        };
        let virama = match (&cfg.data.virama_chars, &cfg.data.virama_langs) {
            (Some(c), Some(l)) => ViramaConfig::load(c, l).map_err(as_config)?,
            _ => ViramaConfig::default(),
        };
        let zh = match &cfg.data.zh_blocklist {
            Some(p) => ZhBlocklist::load(p).map_err(as_config)?,
            None => ZhBlocklist::default(),
        };
        let decisions = cfg.audit_decisions.as_deref().map(load_decisions).transpose()?;
        let converter: Box<dyn ZawgyiConverter> = match cfg.params.zawgyi_converter {
            ConverterKind::Rules => Box::new(RuleConverter),
            ConverterKind::Identity => Box::new(IdentityConverter),
        };
        Ok(StageContext {
            params: cfg.params.clone(),
            scorer: QuestionableScorer::new(cfg.params.scorer, cursed),
            virama,
            zh,
            decisions,
            predictor: Box::new(ScriptStubPredictor::default()),
            converter,
        })
    }

    /// Per-document stage. Returns the (possibly modified) document and its fate.
    pub fn apply(&self, stage: Stage, mut doc: Document) -> Result<(Document, Outcome)> {
        let p = &self.params;
        Ok(match stage {
            Stage::PrelimPageFilter => prelim_page_filter(doc, &p.prelim),
            Stage::Virama => (fix_virama_doc(doc, &self.virama).0, Outcome::Keep),
            Stage::Zawgyi => {
                let (doc, outcome) = maybe_convert_zawgyi(doc, p.zawgyi_threshold, &BigramDetector, self.converter.as_ref());
                if let Some(e) = outcome.error {
                    log::warn!("zawgyi conversion failed for {}: {e}", doc.id);
                }
                (doc, Outcome::Keep)
            }
            Stage::ZhBlocklist => {
                let o = zh_blocklist_filter(&doc, &self.zh);
                (doc, o)
            }
            Stage::Langid => {
                doc = split_sentences(doc);
                match predict_document_lang(&mut doc, self.predictor.as_ref()) {
                    Ok(lang) => {
                        if p.langid_relabel {
                            doc.lang = lang;
                        }
                        (doc, Outcome::Keep)
                    }
                    Err(Error::UndefinedLanguage) => (doc, Outcome::Drop("undefined_language")),
                    Err(e) => return Err(e),
                }
            }
            Stage::Questionable => {
                if doc.sentences.is_empty() {
                    doc = split_sentences(doc);
                }
                self.scorer.annotate(&mut doc);
                let o = clean_gate(&doc, &p.gate);
                (doc, o)
            }
            Stage::AuditGate => self.audit_gate(doc)?,
            Stage::DedupLines | Stage::DropTiny => {
                return Err(Error::InvalidParameter(format!("{} is not a per-document stage", stage.name())))
            }
        })
    }

    fn audit_gate(&self, mut doc: Document) -> Result<(Document, Outcome)> {
        let Some(decisions) = &self.decisions else {
            return Ok((doc, Outcome::Keep));
        };
        let outcome = match decisions.get(&doc.lang.code) {
            None if self.params.audit_require_verdict => Outcome::Drop("unaudited"),
            None => Outcome::Keep,
            Some(d) => match d.decision {
                Decision::Keep | Decision::FilterNote => Outcome::Keep,
                Decision::Remove => Outcome::Drop("audit_remove"),
                Decision::Rename | Decision::Merge => {
                    let target = d.target.as_deref().ok_or_else(|| Error::Config("rename without target".into()))?;
                    doc.lang = normalize_lang_code(target)?;
                    Outcome::Keep
                }
            },
        };
        Ok((doc, outcome))
    }
}

/// Remove languages with fewer than `min_docs` documents.
pub fn drop_tiny_languages(docs: Vec<Document>, min_docs: usize) -> (Vec<Document>, FilterReport) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &docs {
        *counts.entry(d.lang.code.as_str()).or_insert(0) += 1;
    }
    let keep: std::collections::BTreeSet<String> = counts
        .into_iter()
        .filter(|(_, n)| *n >= min_docs)
        .map(|(l, _)| l.to_string())
        .collect();
    let mut report = FilterReport::new(Stage::DropTiny.name());
    let out = docs
        .into_iter()
        .filter(|d| {
            let k = keep.contains(&d.lang.code);
            report.record(if k { Outcome::Keep } else { Outcome::Drop("tiny_language") });
            k
        })
        .collect();
    (out, report)
}

fn shard_ranges(len: usize, shards: usize) -> Vec<std::ops::Range<usize>> {
    let chunk = len.div_ceil(shards.max(1)).max(1);
    (0..len).step_by(chunk).map(|s| s..(s + chunk).min(len)).collect()
}

/// Run one per-document stage over contiguous shards in parallel.
fn run_map_stage(ctx: &StageContext, stage: Stage, docs: Vec<Document>, shards: usize) -> Result<(Vec<Document>, FilterReport)> {
    let ranges = shard_ranges(docs.len(), shards);
    let mut chunks: Vec<Vec<Document>> = Vec::with_capacity(ranges.len());
    let mut it = docs.into_iter();
    for r in &ranges {
        chunks.push(it.by_ref().take(r.len()).collect());
    }
    let results: Vec<Result<(Vec<Document>, FilterReport)>> = chunks
        .into_par_iter()
        .enumerate()
        .map(|(shard, chunk)| {
            let mut report = FilterReport::new(stage.name());
            let mut kept = Vec::with_capacity(chunk.len());
            for doc in chunk {
                let (doc, outcome) = ctx.apply(stage, doc).map_err(|e| Error::Stage {
                    stage: stage.name().to_string(),
                    shard,
                    message: e.to_string(),
                })?;
                report.record(outcome);
                if outcome.is_keep() {
                    kept.push(doc);
                }
            }
            Ok((kept, report))
        })
        .collect();
    let mut out = Vec::new();
    let mut report = FilterReport::new(stage.name());
    for r in results {
        let (docs, rep) = r?;
        out.extend(docs);
        report.merge(&rep);
    }
    Ok((out, report))
}

pub fn run_stages(ctx: &StageContext, stages: &[Stage], docs: Vec<Document>, shards: usize) -> Result<(Vec<Document>, Vec<FilterReport>)> {
    let mut docs = docs;
    let mut reports = Vec::with_capacity(stages.len());
    for &stage in stages {
        let (next, report) = match stage {
            Stage::DedupLines => dedup_lines_sharded(docs, shards),
            Stage::DropTiny => drop_tiny_languages(docs, ctx.params.min_docs),
            _ => run_map_stage(ctx, stage, docs, shards)?,
        };
        log::info!("{}: {} in, {} kept", stage.name(), report.input, report.kept);
        docs = next;
        reports.push(report);
    }
    Ok((docs, reports))
}

/// Read one JSON Lines file, or every `*.jsonl` file in a directory in name order.
pub fn read_input(path: &Path) -> Result<Vec<Document>> {
    let open = |p: &Path| -> Result<Vec<Document>> {
        let f = fs::File::open(p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?;
        read_jsonl(BufReader::new(f)).map_err(|e| Error::Data(format!("{}: {e}", p.display())))
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        let mut docs = Vec::new();
        for f in files {
            docs.extend(open(&f)?);
        }
        Ok(docs)
    } else {
        open(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub documents: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub documents: usize,
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsPair {
    pub noisy: CorpusStats,
    pub clean: CorpusStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub documents: Vec<Document>,
    pub reports: Vec<FilterReport>,
    pub stats: StatsPair,
    pub manifest: Manifest,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Write shards, reports, stats and manifest into a staging directory next to
/// `output`, then swap it into place.
pub fn publish(output: &Path, docs: &[Document], reports: &[FilterReport], stats: &StatsPair, seed: u64, stages: &[Stage], docs_per_file: usize) -> Result<Manifest> {
    let parent = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let name = output
        .file_name()
        .ok_or_else(|| Error::Config(format!("bad output path {}", output.display())))?
        .to_string_lossy();
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;

    let result = (|| -> Result<Manifest> {
        let mut files = Vec::new();
        let chunks: Vec<&[Document]> = if docs.is_empty() { vec![&[]] } else { docs.chunks(docs_per_file).collect() };
        for (i, chunk) in chunks.into_iter().enumerate() {
            let fname = format!("part-{i:05}.jsonl");
            let mut buf = Vec::new();
            write_jsonl(&mut buf, chunk)?;
            write_file(&staging.join(&fname), &buf)?;
            files.push(ManifestFile { name: fname, documents: chunk.len(), sha256: hex::encode(Sha256::digest(&buf)) });
        }
        write_file(&staging.join("reports.json"), &pretty(&reports)?)?;
        write_file(&staging.join("stats.json"), &pretty(stats)?)?;
        let manifest = Manifest { documents: docs.len(), seed, stages: stages.to_vec(), files };
        write_file(&staging.join("manifest.json"), &pretty(&manifest)?)?;
        Ok(manifest)
    })();
    let manifest = match result {
        Ok(m) => m,
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
    };
    if output.exists() {
        fs::remove_dir_all(output)?;
    }
    fs::rename(&staging, output)?;
    Ok(manifest)
}

/// Run the configured stages on in-memory documents without writing anything.
pub fn run_in_memory(cfg: &PipelineConfig, docs: Vec<Document>) -> Result<(Vec<Document>, Vec<FilterReport>, StatsPair)> {
    cfg.validate()?;
    let ctx = StageContext::from_config(cfg)?;
    let noisy = compute_stats(&docs, &Whitespace);
    let (out, reports) = run_stages(&ctx, &cfg.stages, docs, cfg.shards)?;
    let clean = compute_stats(&out, &Whitespace);
    Ok((out, reports, StatsPair { noisy, clean }))
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let docs = read_input(&cfg.input)?;
    let (documents, reports, stats) = run_in_memory(cfg, docs)?;
    let manifest = publish(&cfg.output, &documents, &reports, &stats, cfg.seed, &cfg.stages, cfg.docs_per_file)?;
    Ok(PipelineRun { documents, reports, stats, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn long_doc(id: &str, lang: &str, seed: usize) -> Document {
        let line = |k: usize| {
            format!(
                "Sentence number {k} from document {seed} talks about rivers and the mountains nearby. \
                 It keeps going with more words about weather, farming, markets and local schools today. \
                 The third part mentions families, music, festivals and the long roads between the towns."
            )
        };
        Document::from_text(id, lang, &(0..3).map(line).collect::<Vec<_>>().join("\n")).unwrap()
    }

    #[test]
    fn default_order_and_names() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.stages.len(), 9);
        assert_eq!(serde_json::to_string(&Stage::ZhBlocklist).unwrap(), "\"zh_blocklist\"");
        cfg.validate().unwrap();
    }

    #[test]
    fn config_errors() {
        let mut cfg = PipelineConfig::default();
        cfg.params.gate.max_questionable = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = PipelineConfig::default();
        cfg.data.zh_blocklist = Some("/nonexistent/list.txt".into());
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        let mut cfg = PipelineConfig::default();
        cfg.stages = vec![Stage::Langid, Stage::Langid];
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"shardz": 2}"#).is_err());
    }

    #[test]
    fn drop_tiny_boundary() {
        let mut docs: Vec<Document> = (0..19).map(|i| long_doc(&format!("a{i}"), "fr", i)).collect();
        docs.extend((0..20).map(|i| long_doc(&format!("b{i}"), "de", i)));
        let (out, rep) = drop_tiny_languages(docs, 20);
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|d| d.lang.code == "de"));
        assert_eq!(rep.drop_reasons["tiny_language"], 19);
        assert!(drop_tiny_languages(vec![], 20).0.is_empty());
    }

    #[test]
    fn empty_input() {
        let (out, reports, stats) = run_in_memory(&PipelineConfig::default(), vec![]).unwrap();
        assert!(out.is_empty());
        assert!(reports.iter().all(|r| r.input == 0));
        assert_eq!(stats.clean.n_documents, 0);
    }

    #[test]
    fn shard_count_invariance() {
        let docs: Vec<Document> = (0..60)
            .map(|i| long_doc(&format!("d{i}"), if i % 3 == 0 { "fr" } else { "en" }, i % 25))
            .collect();
        let mut cfg = PipelineConfig::default();
        cfg.params.min_docs = 1;
        let base = run_in_memory(&cfg, docs.clone()).unwrap();
        for shards in [2, 7, 64] {
            cfg.shards = shards;
            let r = run_in_memory(&cfg, docs.clone()).unwrap();
            assert_eq!(r.0, base.0);
            assert_eq!(r.1, base.1);
        }
        for w in base.1.windows(2) {
            assert_eq!(w[1].input, w[0].kept);
        }
    }
}
