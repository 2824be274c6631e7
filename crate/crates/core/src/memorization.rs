//! Training-data extraction tests for translation models, plus the few-shot
//! prompt format used for evaluation.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canary::rng_for;
use crate::error::{Error, Result};
use crate::metrics::levenshtein_similarity;

pub const DEFAULT_PROBES: usize = 2000;
pub const DEFAULT_PROMPT_LEN: usize = 50;
pub const DEFAULT_DELTA: usize = 50;
pub const DEFAULT_APPROX_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    TranslateCopy,
    TranslateDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionProbe {
    pub id: String,
    /// Language code, or `src-tgt` for translate_diff.
    pub lang: String,
    pub prompt_tokens: Vec<u32>,
    pub continuation_tokens: Vec<u32>,
    pub mode: ProbeMode,
    /// Training-time target/source token ratio (translate_diff only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub probe_id: String,
    pub lang: String,
    pub verbatim: bool,
    pub approximate: bool,
    pub similarity: f64,
    /// The model returned fewer tokens than the comparison window.
    pub truncated: bool,
}

/// Generation contract: given a prompt, return up to `max_new_tokens`
/// tokens continuing it (greedy decoding expected).
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &[u32], max_new_tokens: usize) -> Result<Vec<u32>>;
}

fn sample_indices(len: usize, n: usize, seed: u64, label: &str) -> Vec<usize> {
    let mut rng = rng_for(seed, label);
    let mut idx = index::sample(&mut rng, len, n.min(len)).into_vec();
    idx.sort_unstable();
    idx
}

/// translate_copy probes: the first `prompt_len` tokens of sequences longer
/// than that, sampled uniformly without replacement.
pub fn sample_probes(seqs: &[Vec<u32>], lang: &str, n: usize, prompt_len: usize, seed: u64) -> Vec<ExtractionProbe> {
    let eligible: Vec<usize> = (0..seqs.len()).filter(|&i| seqs[i].len() > prompt_len).collect();
    if eligible.is_empty() {
        log::warn!("no sequences longer than {prompt_len} tokens for {lang}");
        return Vec::new();
    }
    sample_indices(eligible.len(), n, seed, &format!("probes/copy/{lang}"))
        .into_iter()
        .map(|k| {
            let i = eligible[k];
            ExtractionProbe {
                id: format!("{lang}-{i}"),
                lang: lang.to_string(),
                prompt_tokens: seqs[i][..prompt_len].to_vec(),
                continuation_tokens: seqs[i][prompt_len..].to_vec(),
                mode: ProbeMode::TranslateCopy,
                length_ratio: None,
            }
        })
        .collect()
}

/// translate_diff probes from (source, target) training pairs. The prompt is
/// the source prefix, the continuation is the target, and the ratio is the
/// pair's target/source token ratio.
pub fn sample_pair_probes(
    pairs: &[(Vec<u32>, Vec<u32>)],
    lang_pair: &str,
    n: usize,
    prompt_len: usize,
    seed: u64,
) -> Vec<ExtractionProbe> {
    let eligible: Vec<usize> = (0..pairs.len())
        .filter(|&i| pairs[i].0.len() > prompt_len && !pairs[i].1.is_empty())
        .collect();
    if eligible.is_empty() {
        log::warn!("no eligible pairs for {lang_pair}");
        return Vec::new();
    }
    sample_indices(eligible.len(), n, seed, &format!("probes/diff/{lang_pair}"))
        .into_iter()
        .map(|k| {
            let i = eligible[k];
            let (src, tgt) = &pairs[i];
            ExtractionProbe {
                id: format!("{lang_pair}-{i}"),
                lang: lang_pair.to_string(),
                prompt_tokens: src[..prompt_len].to_vec(),
                continuation_tokens: tgt.clone(),
                mode: ProbeMode::TranslateDiff,
                length_ratio: Some(tgt.len() as f64 / src.len() as f64),
            }
        })
        .collect()
}

/// Total generation length S; `S - prompt_len` tokens are compared.
pub fn target_generation_length(mode: ProbeMode, prompt_len: usize, ratio: Option<f64>, delta: usize) -> Result<usize> {
    match mode {
        ProbeMode::TranslateCopy => Ok(prompt_len + delta),
        ProbeMode::TranslateDiff => {
            let r = ratio.ok_or_else(|| Error::InvalidParameter("translate_diff needs a length ratio".into()))?;
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("length ratio must be positive, got {r}")));
            }
            Ok((prompt_len as f64 * r).round() as usize + delta)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub delta: usize,
    pub approx_threshold: f64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams { delta: DEFAULT_DELTA, approx_threshold: DEFAULT_APPROX_THRESHOLD }
    }
}

/// Score one generation against the probe's continuation over the
/// `S - P` window (capped at the continuation length).
pub fn score_generation(probe: &ExtractionProbe, generated: &[u32], p: &ProbeParams) -> Result<ExtractionResult> {
    let s = target_generation_length(probe.mode, probe.prompt_tokens.len(), probe.length_ratio, p.delta)?;
    let window = s.saturating_sub(probe.prompt_tokens.len()).min(probe.continuation_tokens.len());
    let expected = &probe.continuation_tokens[..window];
    let got = &generated[..generated.len().min(window)];
    let truncated = got.len() < window;
    let verbatim = !truncated && got == expected;
    let similarity = if verbatim { 1.0 } else { levenshtein_similarity(got, expected) };
    Ok(ExtractionResult {
        probe_id: probe.id.clone(),
        lang: probe.lang.clone(),
        verbatim,
        approximate: verbatim || similarity >= p.approx_threshold,
        similarity,
        truncated,
    })
}

pub fn test_probe(probe: &ExtractionProbe, model: &dyn Generator, p: &ProbeParams) -> Result<ExtractionResult> {
    let s = target_generation_length(probe.mode, probe.prompt_tokens.len(), probe.length_ratio, p.delta)?;
    let generated = model.generate(&probe.prompt_tokens, s - probe.prompt_tokens.len())?;
    score_generation(probe, &generated, p)
}

/// Run probes with at most `max_in_flight` concurrent model calls. Results
/// come back in probe order.
pub fn run_probes(
    probes: &[ExtractionProbe],
    model: &dyn Generator,
    p: &ProbeParams,
    max_in_flight: usize,
) -> Result<Vec<ExtractionResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .map_err(|e| Error::Model(e.to_string()))?;
    pool.install(|| probes.par_iter().map(|pr| test_probe(pr, model, p)).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LangRates {
    pub probes: usize,
    pub verbatim: usize,
    pub approximate: usize,
    pub truncated: usize,
    pub verbatim_rate: f64,
    pub approximate_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub per_lang: BTreeMap<String, LangRates>,
    /// Languages without a single positive probe.
    pub zero_memorization: usize,
    pub languages: usize,
}

pub fn extraction_report(results: &[ExtractionResult]) -> ExtractionReport {
    let mut per_lang: BTreeMap<String, LangRates> = BTreeMap::new();
    for r in results {
        let e = per_lang.entry(r.lang.clone()).or_default();
        e.probes += 1;
        e.verbatim += usize::from(r.verbatim);
        e.approximate += usize::from(r.approximate);
        e.truncated += usize::from(r.truncated);
    }
    for e in per_lang.values_mut() {
        e.verbatim_rate = e.verbatim as f64 / e.probes as f64;
        e.approximate_rate = e.approximate as f64 / e.probes as f64;
    }
    ExtractionReport {
        zero_memorization: per_lang.values().filter(|e| e.approximate == 0).count(),
        languages: per_lang.len(),
        per_lang,
    }
}

/// `<sl>:<X>\n<tl>:<Y>\n\n` per demonstration, then `<sl>:<X>\n<tl>:`.
pub fn few_shot_prompt(demos: &[(String, String)], test_src: &str, sl_name: &str, tl_name: &str) -> String {
    let mut out = String::new();
    for (x, y) in demos {
        out.push_str(&format!("{sl_name}:{x}\n{tl_name}:{y}\n\n"));
    }
    out.push_str(&format!("{sl_name}:{test_src}\n{tl_name}:"));
    out
}

/// Randomly chosen demonstrations from a pool.
pub fn sample_demos<R: Rng>(pool: &[(String, String)], k: usize, rng: &mut R) -> Vec<(String, String)> {
    pool.choose_multiple(rng, k).cloned().collect()
}

/// Generation endpoint speaking `{tokens, max_new_tokens}` -> `{tokens}`.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    url: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct GenRequest<'a> {
    tokens: &'a [u32],
    max_new_tokens: usize,
}

#[derive(Deserialize)]
struct GenResponse {
    tokens: Vec<u32>,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Model(e.to_string()))?;
        Ok(HttpGenerator { url: url.into(), client })
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, prompt: &[u32], max_new_tokens: usize) -> Result<Vec<u32>> {
        let resp = self
            .client
            .post(&self.url)
            .json(&GenRequest { tokens: prompt, max_new_tokens })
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::Model(format!("{}: {e}", self.url)))?;
        let body: GenResponse = resp.json().map_err(|e| Error::Model(format!("bad response: {e}")))?;
        Ok(body.tokens)
    }
}

/// Model that has memorized the given sequences: a known prompt is answered
/// with its true continuation, anything else with nothing.
#[derive(Debug, Clone, Default)]
pub struct ReplayModel {
    table: HashMap<Vec<u32>, Vec<u32>>,
}

impl ReplayModel {
    pub fn from_probes(probes: &[ExtractionProbe]) -> Self {
        ReplayModel {
            table: probes.iter().map(|p| (p.prompt_tokens.clone(), p.continuation_tokens.clone())).collect(),
        }
    }
}

impl Generator for ReplayModel {
    fn generate(&self, prompt: &[u32], max_new_tokens: usize) -> Result<Vec<u32>> {
        Ok(self
            .table
            .get(prompt)
            .map(|c| c[..c.len().min(max_new_tokens)].to_vec())
            .unwrap_or_default())
    }
}

fn prompt_rng(seed: u64, prompt: &[u32]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for t in prompt {
        h.update(t.to_le_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Model that never saw the data: uniform random tokens, seeded per prompt.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub vocab_size: u32,
    pub seed: u64,
}

impl Generator for RandomModel {
    fn generate(&self, prompt: &[u32], max_new_tokens: usize) -> Result<Vec<u32>> {
        let mut rng = prompt_rng(self.seed, prompt);
        Ok((0..max_new_tokens).map(|_| rng.gen_range(0..self.vocab_size)).collect())
    }
}

/// Replay model that substitutes `edits` tokens at random positions of each
/// answer.
#[derive(Debug, Clone)]
pub struct PerturbedModel {
    pub inner: ReplayModel,
    pub edits: usize,
    pub seed: u64,
}

impl Generator for PerturbedModel {
    fn generate(&self, prompt: &[u32], max_new_tokens: usize) -> Result<Vec<u32>> {
        let mut out = self.inner.generate(prompt, max_new_tokens)?;
        let mut rng = prompt_rng(self.seed, prompt);
        let n = self.edits.min(out.len());
        for i in index::sample(&mut rng, out.len(), n) {
            out[i] = out[i].wrapping_add(1);
        }
        Ok(out)
    }
}

/// Replay model that only remembers the listed prompts.
#[derive(Debug, Clone)]
pub struct PartialReplayModel {
    pub inner: ReplayModel,
    pub fallback: RandomModel,
}

impl Generator for PartialReplayModel {
    fn generate(&self, prompt: &[u32], max_new_tokens: usize) -> Result<Vec<u32>> {
        match self.inner.table.contains_key(prompt) {
            true => self.inner.generate(prompt, max_new_tokens),
            false => self.fallback.generate(prompt, max_new_tokens),
        }
    }
}

pub fn read_probes<R: std::io::BufRead>(r: R) -> Result<Vec<ExtractionProbe>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Data(format!("probe line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize, len: usize, seed: u64) -> Vec<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..len).map(|_| rng.gen_range(0..32_000)).collect()).collect()
    }

    #[test]
    fn generation_length() {
        assert_eq!(target_generation_length(ProbeMode::TranslateCopy, 50, None, 50).unwrap(), 100);
        assert_eq!(target_generation_length(ProbeMode::TranslateDiff, 50, Some(1.5), 50).unwrap(), 125);
        assert_eq!(target_generation_length(ProbeMode::TranslateDiff, 50, Some(1.0), 50).unwrap(), 100);
        assert!(target_generation_length(ProbeMode::TranslateDiff, 50, None, 50).is_err());
        assert!(target_generation_length(ProbeMode::TranslateDiff, 50, Some(0.0), 50).is_err());
    }

    #[test]
    fn probe_sampling() {
        let c = corpus(5, 120, 1);
        assert_eq!(sample_probes(&c, "sw", 2000, 50, 3).len(), 5);
        let c = corpus(3000, 80, 2);
        let a = sample_probes(&c, "sw", 2000, 50, 3);
        assert_eq!(a.len(), 2000);
        assert!(a.iter().all(|p| p.prompt_tokens.len() == 50 && p.continuation_tokens.len() == 30));
        assert_eq!(a, sample_probes(&c, "sw", 2000, 50, 3));
        let short = corpus(4, 50, 2);
        assert!(sample_probes(&short, "sw", 10, 50, 3).is_empty());
    }

    #[test]
    fn oracle_models() {
        let c = corpus(200, 150, 4);
        let probes = sample_probes(&c, "xx", 2000, 50, 9);
        let p = ProbeParams::default();
        let replay = ReplayModel::from_probes(&probes);
        let r = extraction_report(&run_probes(&probes, &replay, &p, 8).unwrap());
        assert_eq!(r.per_lang["xx"].verbatim_rate, 1.0);

        let random = RandomModel { vocab_size: 32_000, seed: 1 };
        let res = run_probes(&probes, &random, &p, 8).unwrap();
        assert!(res.iter().all(|r| !r.verbatim && r.similarity < 0.1));
        assert_eq!(extraction_report(&res).zero_memorization, 1);

        let perturbed = PerturbedModel { inner: replay, edits: 4, seed: 5 };
        let res = run_probes(&probes, &perturbed, &p, 8).unwrap();
        for r in &res {
            assert!(!r.verbatim);
            assert!((r.similarity - 0.92).abs() < 1e-12);
            assert!(r.approximate);
        }
    }

    #[test]
    fn truncated_generation() {
        let probe = ExtractionProbe {
            id: "a".into(),
            lang: "xx".into(),
            prompt_tokens: vec![1; 50],
            continuation_tokens: (0..60).collect(),
            mode: ProbeMode::TranslateCopy,
            length_ratio: None,
        };
        let r = score_generation(&probe, &(0..45).collect::<Vec<_>>(), &ProbeParams::default()).unwrap();
        assert!(r.truncated && !r.verbatim && r.approximate);
        assert!((r.similarity - 0.9).abs() < 1e-12);
    }

    #[test]
    fn report_counts() {
        let mk = |lang: &str, v: bool| ExtractionResult {
            probe_id: String::new(),
            lang: lang.into(),
            verbatim: v,
            approximate: v,
            similarity: 0.0,
            truncated: false,
        };
        let mut res: Vec<_> = (0..2000).map(|i| mk("aa", i < 3)).collect();
        res.extend((0..10).map(|_| mk("bb", false)));
        let r = extraction_report(&res);
        assert!((r.per_lang["aa"].verbatim_rate - 0.0015).abs() < 1e-15);
        assert_eq!(r.zero_memorization, 1);
        res.reverse();
        assert_eq!(extraction_report(&res), r);
    }

    #[test]
    fn prompts() {
        assert_eq!(few_shot_prompt(&[], "hi", "English", "Telugu"), "English:hi\nTelugu:");
        let demos = vec![("a".to_string(), "b".to_string())];
        assert_eq!(few_shot_prompt(&demos, "c", "English", "French"), "English:a\nFrench:b\n\nEnglish:c\nFrench:");
        let demos: Vec<_> = (0..5).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        assert_eq!(few_shot_prompt(&demos, "x", "English", "Telugu").matches("\n\n").count(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_demos(&demos, 3, &mut rng).len(), 3);
    }
}
