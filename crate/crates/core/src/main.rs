use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use curate_core::audit;
use curate_core::canary::{
    build_canary_plan, canary_record, CanaryPairs, CanarySources, GenerationReport, PlanInputs, TierTable,
};
use curate_core::corpus::{read_jsonl, DocRecord};
use curate_core::langid::ScriptStubPredictor;
use curate_core::lang::LangTables;
use curate_core::memorization::{
    extraction_report, run_probes, sample_pair_probes, sample_probes, ExtractionProbe, Generator, HttpGenerator,
    ProbeParams, RandomModel, ReplayModel,
};
use curate_core::metrics::ChrfParams;
use curate_core::parallel::{
    bt_filter, filter_pairs, mine_multiway, read_tsv, write_tsv, BtCandidate, BtParams, MatchMode,
    ParallelFilterConfig, ToxicityLists,
};
use curate_core::pipeline::{read_input, run_pipeline, PipelineConfig};
use curate_core::report::FilterReport;
use curate_core::stats::compute_stats;
use curate_core::tokenize::{Tokenizer, Whitespace, WordLevel};
use curate_core::unimax::{unimax_weights, DEFAULT_MAX_EPOCHS};
use curate_core::{wet, Error, Result};

#[derive(Parser)]
#[command(name = "curate", version, about = "Multilingual corpus curation toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Configuration file (JSON, or TOML with a .toml extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    shards: Option<usize>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the monolingual cleaning pipeline.
    Clean {
        #[arg(long)]
        audit_decisions: Option<PathBuf>,
        #[arg(long)]
        min_docs: Option<usize>,
    },
    /// Filter a bitext TSV (src_lang, tgt_lang, src, tgt, origin).
    ParallelFilter {
        /// Directory of <lang>.txt toxicity term lists.
        #[arg(long)]
        toxicity_dir: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Filter back-translation candidates (JSON Lines).
    BtFilter {
        #[arg(long)]
        no_langid: bool,
    },
    /// Mine non-English pairs from English-centric bitext.
    Multiway {
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[arg(long, default_value_t = 8)]
        ngram: usize,
    },
    /// Plan and generate canaries.
    Canaries {
        /// JSON inventory: monolingual / parallel sample counts, pairs, generic_total.
        #[arg(long)]
        inventory: PathBuf,
        /// Use the bundled list of qualifying language pairs.
        #[arg(long)]
        bundled_pairs: bool,
        /// Bitext TSV supplying parallel and pairwise source material.
        #[arg(long)]
        bitext: Option<PathBuf>,
        /// Word-level vocabulary JSON; trained on the inputs when absent.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the plan report and stop.
        #[arg(long)]
        plan_only: bool,
    },
    /// Run training-data extraction probes against a model.
    Probe {
        #[arg(long, value_enum, default_value_t = ProbeKind::Copy)]
        mode: ProbeKind,
        /// HTTP generation endpoint taking {tokens, max_new_tokens}.
        #[arg(long, conflicts_with = "oracle")]
        endpoint: Option<String>,
        /// Built-in reference model instead of an endpoint.
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        prompt_len: usize,
        #[arg(long, default_value_t = 50)]
        delta: usize,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        #[arg(long, default_value_t = 8)]
        in_flight: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Corpus statistics for a document JSON Lines file.
    Stats,
    /// UniMax mixture weights from a JSON map of per-language token counts.
    Unimax {
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
        max_epochs: f64,
    },
    /// Serve the self-audit HTTP API over a document corpus.
    AuditServe {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Append-only verdict log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Convert a WET extract into document JSON Lines.
    ImportWet {
        #[arg(long)]
        lang: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Ngram,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeKind {
    Copy,
    Diff,
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Replay,
    Random,
}

fn need(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.clone().ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(path: Option<&Path>, v: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_vocab(path: Option<&Path>, texts: &[&str]) -> Result<WordLevel> {
    match path {
        Some(p) => {
            let json = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            WordLevel::from_json(&json).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
        None => Ok(WordLevel::train(texts.iter().copied(), 32_000)),
    }
}

fn clean(g: &Global, audit_decisions: Option<PathBuf>, min_docs: Option<usize>) -> Result<()> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &g.input {
        cfg.input = v.clone();
    }
    if let Some(v) = &g.output {
        cfg.output = v.clone();
    }
    if let Some(v) = g.shards {
        cfg.shards = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if audit_decisions.is_some() {
        cfg.audit_decisions = audit_decisions;
    }
    if let Some(v) = min_docs {
        cfg.params.min_docs = v;
    }
    if cfg.input.as_os_str().is_empty() || cfg.output.as_os_str().is_empty() {
        return Err(Error::Config("input and output paths are required".into()));
    }
    let run = run_pipeline(&cfg)?;
    emit_json(None, &run.reports)
}

fn parallel_filter(g: &Global, toxicity_dir: Option<PathBuf>, report: Option<PathBuf>) -> Result<()> {
    let cfg: ParallelFilterConfig = match &g.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let parsed = if p.extension().is_some_and(|e| e == "toml") {
                toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
            } else {
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
            };
            parsed?
        }
        None => ParallelFilterConfig::default(),
    };
    let lists = toxicity_dir.as_deref().map(ToxicityLists::load_dir).transpose()?;
    let pairs = read_tsv(open(&need(&g.input, "input")?)?)?;
    let (kept, rep) = filter_pairs(pairs, &cfg, LangTables::global(), lists.as_ref());
    for w in &rep.warnings {
        log::warn!("{w}");
    }
    let mut out = sink(g.output.as_deref())?;
    write_tsv(&mut out, &kept)?;
    out.flush()?;
    match report {
        Some(p) => emit_json(Some(&p), &rep),
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(())
        }
    }
}

fn bt(g: &Global, no_langid: bool) -> Result<()> {
    let mut params = BtParams::default();
    params.check_langid = !no_langid;
    let predictor = ScriptStubPredictor::default();
    let mut report = FilterReport::new("bt_filter");
    let mut out = sink(g.output.as_deref())?;
    for (i, line) in std::io::BufRead::lines(open(&need(&g.input, "input")?)?).enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: BtCandidate = serde_json::from_str(&line).map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        let o = bt_filter(&c, &params, &ChrfParams::default(), Some(&predictor));
        report.record(o);
        if o.is_keep() {
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    eprintln!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn multiway(g: &Global, mode: Mode, n: usize) -> Result<()> {
    let pairs = read_tsv(open(&need(&g.input, "input")?)?)?;
    let mode = match mode {
        Mode::Exact => MatchMode::Exact,
        Mode::Ngram => MatchMode::Ngram,
        Mode::Both => MatchMode::Both,
    };
    let res = mine_multiway(&pairs, mode, n);
    let mut out = sink(g.output.as_deref())?;
    write_tsv(&mut out, &res.pairs)?;
    out.flush()?;
    eprintln!("{} pairs mined, {} inputs skipped", res.pairs.len(), res.skipped_inputs);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn canaries(
    g: &Global,
    inventory: &Path,
    bundled_pairs: bool,
    bitext: Option<PathBuf>,
    vocab: Option<PathBuf>,
    report: Option<PathBuf>,
    plan_only: bool,
) -> Result<()> {
    let text = std::fs::read_to_string(inventory).map_err(|e| Error::Config(format!("{}: {e}", inventory.display())))?;
    let mut inputs: PlanInputs = serde_json::from_str(&text).map_err(|e| Error::Config(format!("inventory: {e}")))?;
    let qualifying = CanaryPairs::default();
    if bundled_pairs {
        inputs.pairs = qualifying.pairs.clone();
    }
    let (plan, plan_report) = build_canary_plan(&inputs, &TierTable::monolingual(), &TierTable::parallel(), g.seed.unwrap_or(0))?;
    if plan_only {
        return emit_json(report.as_deref(), &plan_report);
    }

    let docs = match &g.input {
        Some(p) => read_input(p)?,
        None => Vec::new(),
    };
    let pairs = match &bitext {
        Some(p) => read_tsv(open(p)?)?,
        None => Vec::new(),
    };
    let doc_texts: Vec<String> = docs.iter().map(|d| d.text()).collect();
    let mut texts: Vec<&str> = doc_texts.iter().map(String::as_str).collect();
    for p in &pairs {
        texts.push(&p.src_text);
        texts.push(&p.tgt_text);
    }
    let tok = load_vocab(vocab.as_deref(), &texts)?;

    let mut src = CanarySources { vocab_size: tok.vocab_size(), qualifying_langs: qualifying.langs, ..Default::default() };
    for (d, t) in docs.iter().zip(&doc_texts) {
        src.monolingual.entry(d.lang.code.clone()).or_default().push(tok.encode(t));
    }
    for p in &pairs {
        let (s, t) = (tok.encode(&p.src_text), tok.encode(&p.tgt_text));
        src.parallel_targets.entry(p.tgt_lang.code.clone()).or_default().push(t.clone());
        src.pairs.entry(p.lang_pair()).or_default().push((s, t));
    }

    let mut gen_report = GenerationReport::default();
    let mut out = sink(g.output.as_deref())?;
    for c in plan.generate(&src, &mut gen_report) {
        serde_json::to_writer(&mut out, &canary_record(&c, &|ids| tok.decode(ids)))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    #[derive(Serialize)]
    struct Combined<'a> {
        plan: &'a curate_core::canary::PlanReport,
        generation: &'a GenerationReport,
    }
    let combined = Combined { plan: &plan_report, generation: &gen_report };
    match report {
        Some(p) => emit_json(Some(&p), &combined),
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&combined)?);
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn probe(
    g: &Global,
    mode: ProbeKind,
    endpoint: Option<String>,
    oracle: Option<Oracle>,
    vocab: Option<PathBuf>,
    n: usize,
    prompt_len: usize,
    params: ProbeParams,
    in_flight: usize,
    report: Option<PathBuf>,
) -> Result<()> {
    let input = need(&g.input, "input")?;
    let seed = g.seed.unwrap_or(0);
    let probes: Vec<ExtractionProbe> = match mode {
        ProbeKind::Copy => {
            let docs = read_input(&input)?;
            let texts: Vec<String> = docs.iter().map(|d| d.text()).collect();
            let tok = load_vocab(vocab.as_deref(), &texts.iter().map(String::as_str).collect::<Vec<_>>())?;
            let mut by_lang: BTreeMap<String, Vec<Vec<u32>>> = BTreeMap::new();
            for (d, t) in docs.iter().zip(&texts) {
                by_lang.entry(d.lang.code.clone()).or_default().push(tok.encode(t));
            }
            by_lang.iter().flat_map(|(l, s)| sample_probes(s, l, n, prompt_len, seed)).collect()
        }
        ProbeKind::Diff => {
            let pairs = read_tsv(open(&input)?)?;
            let mut texts = Vec::new();
            for p in &pairs {
                texts.push(p.src_text.as_str());
                texts.push(p.tgt_text.as_str());
            }
            let tok = load_vocab(vocab.as_deref(), &texts)?;
            let mut by_pair: BTreeMap<String, Vec<(Vec<u32>, Vec<u32>)>> = BTreeMap::new();
            for p in &pairs {
                by_pair.entry(p.lang_pair()).or_default().push((tok.encode(&p.src_text), tok.encode(&p.tgt_text)));
            }
            by_pair.iter().flat_map(|(l, s)| sample_pair_probes(s, l, n, prompt_len, seed)).collect()
        }
    };
    let model: Box<dyn Generator> = match (endpoint, oracle) {
        (Some(url), _) => Box::new(HttpGenerator::new(url)?),
        (None, Some(Oracle::Replay)) => Box::new(ReplayModel::from_probes(&probes)),
        (None, Some(Oracle::Random)) => Box::new(RandomModel { vocab_size: 32_000, seed }),
        (None, None) => return Err(Error::Config("either --endpoint or --oracle is required".into())),
    };
    let results = run_probes(&probes, model.as_ref(), &params, in_flight)?;
    if let Some(p) = &g.output {
        let mut out = sink(Some(p))?;
        for r in &results {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    emit_json(report.as_deref(), &extraction_report(&results))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Clean { audit_decisions, min_docs } => clean(g, audit_decisions, min_docs),
        Command::ParallelFilter { toxicity_dir, report } => parallel_filter(g, toxicity_dir, report),
        Command::BtFilter { no_langid } => bt(g, no_langid),
        Command::Multiway { mode, ngram } => multiway(g, mode, ngram),
        Command::Canaries { inventory, bundled_pairs, bitext, vocab, report, plan_only } => {
            canaries(g, &inventory, bundled_pairs, bitext, vocab, report, plan_only)
        }
        Command::Probe { mode, endpoint, oracle, vocab, n, prompt_len, delta, threshold, in_flight, report } => {
            let params = ProbeParams { delta, approx_threshold: threshold };
            probe(g, mode, endpoint, oracle, vocab, n, prompt_len, params, in_flight, report)
        }
        Command::Stats => {
            let docs = read_input(&need(&g.input, "input")?)?;
            emit_json(g.output.as_deref(), &compute_stats(&docs, &Whitespace))
        }
        Command::Unimax { budget, max_epochs } => {
            let input = need(&g.input, "input")?;
            let counts: BTreeMap<String, f64> =
                serde_json::from_reader(open(&input)?).map_err(|e| Error::Data(format!("{}: {e}", input.display())))?;
            emit_json(g.output.as_deref(), &unimax_weights(&counts, budget, max_epochs)?)
        }
        Command::AuditServe { listen, log } => {
            let docs = read_input(&need(&g.input, "input")?)?;
            audit::run(listen, &docs, log, |addr| eprintln!("listening on http://{addr}"))
        }
        Command::ImportWet { lang } => {
            let records = wet::read_wet(open(&need(&g.input, "input")?)?)?;
            let docs: Vec<DocRecord> = wet::to_records(records, lang.as_deref(), &ScriptStubPredictor::default())?;
            let mut out = sink(g.output.as_deref())?;
            for d in &docs {
                serde_json::to_writer(&mut out, d)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            // Round-trip check: everything written must load as documents.
            if let Some(p) = &g.output {
                read_jsonl(open(p)?)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
