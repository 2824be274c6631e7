//! Canary generation: resource tiers, per-type generators, plans and
//! reports for monolingual, parallel, pairwise and generic settings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const TIERS_MONO: &str = include_str!("../data/canary_tiers_mono.tsv");
const TIERS_PARALLEL: &str = include_str!("../data/canary_tiers_parallel.tsv");
const PAIRS: &str = include_str!("../data/canary_pairs.txt");
const PAIR_LANGS: &str = include_str!("../data/canary_pair_langs.txt");

/// Languages need strictly more samples than this to receive canaries.
pub const MIN_SAMPLES_EXCLUSIVE: u64 = 50_000;
pub const MONO_CHUNK: usize = 20;
pub const PARALLEL_CHUNK: usize = 50;
pub const PREFIX_LEN: usize = 100;
/// Source length floor for parallel canaries: a full shared prefix plus a
/// non-trivial random suffix.
pub const PARALLEL_MIN_SOURCE: usize = 120;
/// (unique, repeats) per pairwise type.
pub const PAIRWISE_BUCKETS: [(u64, u64); 3] = [(10, 1), (5, 2), (2, 5)];
pub const GENERIC_TOTAL: u64 = 80_400;
pub const GENERIC_PREFIXES: [Option<usize>; 4] = [None, Some(50), Some(100), Some(200)];
pub const GENERIC_LEN: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanaryType {
    Shuffle,
    Interleave,
    TrainingPrefix,
    RandomPrefixInterleave,
    RandomPrefixShuffle,
    FullyRandomInterleave,
    FullyRandomShuffle,
    InterleavedBoth,
    InterleavedMislabeledTo,
    GenericFullyRandom,
    GenericRandomPrefix,
}

impl CanaryType {
    pub const ALL: [CanaryType; 11] = [
        CanaryType::Shuffle,
        CanaryType::Interleave,
        CanaryType::TrainingPrefix,
        CanaryType::RandomPrefixInterleave,
        CanaryType::RandomPrefixShuffle,
        CanaryType::FullyRandomInterleave,
        CanaryType::FullyRandomShuffle,
        CanaryType::InterleavedBoth,
        CanaryType::InterleavedMislabeledTo,
        CanaryType::GenericFullyRandom,
        CanaryType::GenericRandomPrefix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CanaryType::Shuffle => "shuffle",
            CanaryType::Interleave => "interleave",
            CanaryType::TrainingPrefix => "training_prefix",
            CanaryType::RandomPrefixInterleave => "random_prefix_interleave",
            CanaryType::RandomPrefixShuffle => "random_prefix_shuffle",
            CanaryType::FullyRandomInterleave => "fully_random_interleave",
            CanaryType::FullyRandomShuffle => "fully_random_shuffle",
            CanaryType::InterleavedBoth => "interleaved_both",
            CanaryType::InterleavedMislabeledTo => "interleaved_mislabeled_to",
            CanaryType::GenericFullyRandom => "generic_fully_random",
            CanaryType::GenericRandomPrefix => "generic_random_prefix",
        }
    }
}

impl fmt::Display for CanaryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CanaryType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CanaryType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown canary type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatBucket {
    pub unique: u64,
    pub repeats: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceTier {
    pub name: String,
    /// Inclusive lower bound on sample count.
    pub lo: u64,
    /// Exclusive upper bound; `None` is open-ended.
    pub hi: Option<u64>,
    pub target_rate: f64,
    pub types: Vec<CanaryType>,
    pub total_per_lang: u64,
    pub buckets: Vec<RepeatBucket>,
    pub known_discrepancy: bool,
}

impl ResourceTier {
    pub fn instances(&self) -> u64 {
        self.buckets.iter().map(|b| b.unique * b.repeats).sum()
    }

    pub fn uniques(&self) -> u64 {
        self.buckets.iter().map(|b| b.unique).sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.instances() == self.total_per_lang
    }

    pub fn contains(&self, count: u64) -> bool {
        count >= self.lo && self.hi.is_none_or(|hi| count < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierDiscrepancy {
    pub tier: String,
    pub stated: u64,
    pub computed: u64,
    pub acknowledged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierTable {
    pub tiers: Vec<ResourceTier>,
    pub discrepancies: Vec<TierDiscrepancy>,
}

impl TierTable {
    /// Parse a tier table. Tiers whose buckets disagree with the stated total
    /// are recorded in `discrepancies`; see [`TierTable::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut tiers = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Data(format!("tier table line {}: {m}", i + 1));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 7 {
                return Err(err(format!("expected at least 7 columns, got {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
            let hi = match f[2].trim() {
                "-" => None,
                s => Some(num(s)?),
            };
            let types = f[4]
                .split(',')
                .map(|t| t.trim().parse::<CanaryType>())
                .collect::<Result<Vec<_>>>()?;
            let buckets = f[6]
                .split(',')
                .map(|b| {
                    let (u, r) = b.trim().split_once('x').ok_or_else(|| err(format!("bad bucket {b:?}")))?;
                    Ok(RepeatBucket { unique: num(u)?, repeats: num(r)? })
                })
                .collect::<Result<Vec<_>>>()?;
            tiers.push(ResourceTier {
                name: f[0].trim().to_string(),
                lo: num(f[1])?,
                hi,
                target_rate: f[3].trim().parse().map_err(|e| err(format!("rate: {e}")))?,
                types,
                total_per_lang: num(f[5])?,
                buckets,
                known_discrepancy: f.get(7).is_some_and(|n| n.trim() == "known-discrepancy"),
            });
        }
        let discrepancies = tiers
            .iter()
            .filter(|t| !t.is_consistent())
            .map(|t| TierDiscrepancy {
                tier: t.name.clone(),
                stated: t.total_per_lang,
                computed: t.instances(),
                acknowledged: t.known_discrepancy,
            })
            .collect();
        Ok(TierTable { tiers, discrepancies })
    }

    pub fn monolingual() -> Self {
        Self::parse(TIERS_MONO).expect("bundled monolingual tiers")
    }

    pub fn parallel() -> Self {
        Self::parse(TIERS_PARALLEL).expect("bundled parallel tiers")
    }

    /// Error on any discrepancy that is not explicitly acknowledged.
    pub fn validate(&self) -> Result<()> {
        match self.discrepancies.iter().find(|d| !d.acknowledged) {
            Some(d) => Err(Error::Config(format!(
                "canary tier {}: buckets sum to {} but the stated total is {}",
                d.tier, d.computed, d.stated
            ))),
            None => Ok(()),
        }
    }

    pub fn tier(&self, name: &str) -> Option<&ResourceTier> {
        self.tiers.iter().find(|t| t.name == name)
    }

    pub fn assign(&self, count: u64) -> Option<&ResourceTier> {
        if count <= MIN_SAMPLES_EXCLUSIVE {
            return None;
        }
        self.tiers.iter().find(|t| t.contains(count))
    }
}

/// Qualifying high-resource language pairs for pairwise canaries.
#[derive(Debug, Clone, PartialEq)]
pub struct CanaryPairs {
    pub pairs: Vec<(String, String)>,
    pub langs: Vec<String>,
}

impl CanaryPairs {
    pub fn parse(pairs: &str, langs: &str) -> Result<Self> {
        let rows = |t: &str| -> Vec<String> {
            t.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect()
        };
        let pairs = rows(pairs)
            .into_iter()
            .map(|p| {
                p.split_once('-')
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .ok_or_else(|| Error::Data(format!("bad language pair {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CanaryPairs { pairs, langs: rows(langs) })
    }
}

impl Default for CanaryPairs {
    fn default() -> Self {
        Self::parse(PAIRS, PAIR_LANGS).expect("bundled canary pairs")
    }
}

/// Per-stream seed derived from the master seed and a label.
pub fn derive_seed(master: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

pub fn rng_for(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(master, label))
}

/// Short numeric form of a derived seed, for records.
pub fn seed_id(master: u64, label: &str) -> u64 {
    let s = derive_seed(master, label);
    u64::from_le_bytes(s[..8].try_into().expect("8 bytes"))
}

pub fn gen_shuffle<R: Rng>(tokens: &[u32], rng: &mut R) -> Vec<u32> {
    let mut out = tokens.to_vec();
    out.shuffle(rng);
    out
}

/// Alternate `chunk`-token runs from `a` and `b`, starting with `a`. When one
/// side runs out the rest of the other is appended.
pub fn gen_interleave(a: &[u32], b: &[u32], chunk: usize) -> Vec<u32> {
    let chunk = chunk.max(1);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.chunks(chunk);
    let mut ib = b.chunks(chunk);
    loop {
        let x = ia.next();
        let y = ib.next();
        if x.is_none() && y.is_none() {
            return out;
        }
        if let Some(x) = x {
            out.extend_from_slice(x);
        }
        if let Some(y) = y {
            out.extend_from_slice(y);
        }
    }
}

pub fn random_tokens<R: Rng>(n: usize, vocab_size: usize, rng: &mut R) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..vocab_size as u32)).collect()
}

/// First `prefix_len` real tokens followed by uniform random tokens up to the
/// document's length. `None` when the document is shorter than the prefix.
pub fn gen_training_prefix<R: Rng>(doc: &[u32], prefix_len: usize, vocab_size: usize, rng: &mut R) -> Option<Vec<u32>> {
    if doc.len() < prefix_len {
        return None;
    }
    let mut out = doc[..prefix_len].to_vec();
    out.extend(random_tokens(doc.len() - prefix_len, vocab_size, rng));
    Some(out)
}

/// Random source (shared prefix plus random suffix, or fully random) and a
/// target built from one or two real target sequences.
pub fn gen_parallel_canary<R: Rng>(
    kind: CanaryType,
    target_a: &[u32],
    target_b: Option<&[u32]>,
    shared_prefix: Option<&[u32]>,
    vocab_size: usize,
    rng: &mut R,
) -> Result<(Vec<u32>, Vec<u32>)> {
    let (prefixed, interleaved) = match kind {
        CanaryType::RandomPrefixInterleave => (true, true),
        CanaryType::RandomPrefixShuffle => (true, false),
        CanaryType::FullyRandomInterleave => (false, true),
        CanaryType::FullyRandomShuffle => (false, false),
        other => return Err(Error::InvalidParameter(format!("{other} is not a parallel canary type"))),
    };
    let target = if interleaved {
        let b = target_b.ok_or_else(|| Error::InvalidParameter("interleave needs two targets".into()))?;
        gen_interleave(target_a, b, PARALLEL_CHUNK)
    } else {
        gen_shuffle(target_a, rng)
    };
    let len = target.len().max(PARALLEL_MIN_SOURCE);
    let source = if prefixed {
        let prefix = shared_prefix.ok_or_else(|| Error::InvalidParameter("random_prefix needs a shared prefix".into()))?;
        let mut s = prefix.to_vec();
        s.extend(random_tokens(len.saturating_sub(prefix.len()), vocab_size, rng));
        s
    } else {
        random_tokens(len, vocab_size, rng)
    };
    Ok((source, target))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseCanary {
    pub source: Vec<u32>,
    pub target: Vec<u32>,
    /// Target-language label attached to the canary; differs from the real
    /// target language for the mislabeled type.
    pub target_label: String,
}

/// Interleave the sources and the targets of two real pairs. The mislabeled
/// variant draws a new target label from `qualifying`, excluding both real
/// languages.
pub fn gen_pairwise_canary<R: Rng>(
    kind: CanaryType,
    a: (&[u32], &[u32]),
    b: (&[u32], &[u32]),
    lang_pair: (&str, &str),
    qualifying: &[String],
    rng: &mut R,
) -> Result<PairwiseCanary> {
    let source = gen_interleave(a.0, b.0, PARALLEL_CHUNK);
    let target = gen_interleave(a.1, b.1, PARALLEL_CHUNK);
    let target_label = match kind {
        CanaryType::InterleavedBoth => lang_pair.1.to_string(),
        CanaryType::InterleavedMislabeledTo => {
            let options: Vec<&String> = qualifying
                .iter()
                .filter(|l| l.as_str() != lang_pair.1 && l.as_str() != lang_pair.0)
                .collect();
            options
                .choose(rng)
                .map(|s| s.to_string())
                .ok_or_else(|| Error::InvalidParameter("no alternative target label".into()))?
        }
        other => return Err(Error::InvalidParameter(format!("{other} is not a pairwise canary type"))),
    };
    Ok(PairwiseCanary { source, target, target_label })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Mono(Vec<u32>),
    Parallel { source: Vec<u32>, target: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanarySpec {
    pub canary_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lang_pair: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_label: Option<String>,
    #[serde(rename = "type")]
    pub kind: CanaryType,
    pub repeats: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix_len: Option<usize>,
    pub payload: Payload,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Monolingual,
    Parallel,
    Pairwise,
    Generic,
}

/// Canary budget for one language (or language pair, or generic variant):
/// one `(type, repeats)` slot per unique canary, in generation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LangPlan {
    pub setting: Setting,
    pub key: String,
    pub tier: Option<String>,
    pub prefix_len: Option<usize>,
    pub slots: Vec<(CanaryType, u64)>,
}

impl LangPlan {
    pub fn instances(&self) -> u64 {
        self.slots.iter().map(|s| s.1).sum()
    }

    /// Unique canaries per (type, repeats) cell.
    pub fn cells(&self) -> BTreeMap<(CanaryType, u64), u64> {
        let mut m = BTreeMap::new();
        for s in &self.slots {
            *m.entry(*s).or_insert(0) += 1;
        }
        m
    }
}

/// Types are dealt round-robin across a tier's buckets with one counter per
/// language, so every (type, repeats) cell fills as evenly as possible.
pub fn tier_slots(tier: &ResourceTier) -> Vec<(CanaryType, u64)> {
    let mut slots = Vec::with_capacity(tier.uniques() as usize);
    let mut counter = 0usize;
    for b in &tier.buckets {
        for _ in 0..b.unique {
            slots.push((tier.types[counter % tier.types.len()], b.repeats));
            counter += 1;
        }
    }
    slots
}

pub fn pairwise_slots() -> Vec<(CanaryType, u64)> {
    let mut slots = Vec::new();
    for kind in [CanaryType::InterleavedBoth, CanaryType::InterleavedMislabeledTo] {
        for (unique, repeats) in PAIRWISE_BUCKETS {
            slots.extend(std::iter::repeat_n((kind, repeats), unique as usize));
        }
    }
    slots
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    /// Monolingual sample counts per language.
    pub monolingual: BTreeMap<String, u64>,
    /// Parallel sample counts per target language.
    pub parallel: BTreeMap<String, u64>,
    /// Qualifying `(source, target)` pairs for pairwise canaries.
    pub pairs: Vec<(String, String)>,
    pub generic_total: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SettingTotals {
    pub languages: u64,
    pub unique: u64,
    pub instances: u64,
    /// Sum of the tables' stated per-language totals.
    pub stated_instances: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub settings: BTreeMap<Setting, SettingTotals>,
    /// Languages per (setting, tier).
    pub tiers: BTreeMap<String, u64>,
    pub instances_by_type: BTreeMap<CanaryType, u64>,
    pub total_instances: u64,
    pub stated_total: u64,
    pub discrepancies: Vec<TierDiscrepancy>,
    pub ineligible: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanaryPlan {
    pub seed: u64,
    pub entries: Vec<LangPlan>,
}

pub fn build_canary_plan(
    inputs: &PlanInputs,
    mono: &TierTable,
    parallel: &TierTable,
    seed: u64,
) -> Result<(CanaryPlan, PlanReport)> {
    mono.validate()?;
    parallel.validate()?;
    let mut entries = Vec::new();
    let mut report = PlanReport::default();
    let mut seen = std::collections::BTreeSet::new();
    for (setting, counts, table) in [
        (Setting::Monolingual, &inputs.monolingual, mono),
        (Setting::Parallel, &inputs.parallel, parallel),
    ] {
        for (lang, &count) in counts {
            let Some(tier) = table.assign(count) else {
                report.ineligible.push(format!("{setting:?}:{lang}").to_lowercase());
                continue;
            };
            if tier.known_discrepancy && seen.insert((setting, tier.name.clone())) {
                report.discrepancies.extend(table.discrepancies.iter().filter(|d| d.tier == tier.name).cloned());
            }
            let totals = report.settings.entry(setting).or_default();
            totals.stated_instances += tier.total_per_lang;
            *report.tiers.entry(format!("{}/{}", setting_name(setting), tier.name)).or_insert(0) += 1;
            entries.push(LangPlan { setting, key: lang.clone(), tier: Some(tier.name.clone()), prefix_len: None, slots: tier_slots(tier) });
        }
    }
    for (s, t) in &inputs.pairs {
        let plan = LangPlan { setting: Setting::Pairwise, key: format!("{s}-{t}"), tier: None, prefix_len: None, slots: pairwise_slots() };
        report.settings.entry(Setting::Pairwise).or_default().stated_instances += plan.instances();
        entries.push(plan);
    }
    if inputs.generic_total > 0 {
        let per = inputs.generic_total / GENERIC_PREFIXES.len() as u64;
        let extra = inputs.generic_total % GENERIC_PREFIXES.len() as u64;
        for (i, prefix) in GENERIC_PREFIXES.iter().enumerate() {
            let n = per + u64::from((i as u64) < extra);
            let kind = if prefix.is_some() { CanaryType::GenericRandomPrefix } else { CanaryType::GenericFullyRandom };
            let key = match prefix {
                Some(p) => format!("random_prefix_{p}"),
                None => "fully_random".to_string(),
            };
            entries.push(LangPlan { setting: Setting::Generic, key, tier: None, prefix_len: *prefix, slots: vec![(kind, 1); n as usize] });
        }
        report.settings.entry(Setting::Generic).or_default().stated_instances += inputs.generic_total;
    }

    for e in &entries {
        let totals = report.settings.entry(e.setting).or_default();
        totals.languages += 1;
        totals.unique += e.slots.len() as u64;
        totals.instances += e.instances();
        for (kind, repeats) in &e.slots {
            *report.instances_by_type.entry(*kind).or_insert(0) += repeats;
        }
    }
    report.total_instances = report.settings.values().map(|s| s.instances).sum();
    report.stated_total = report.settings.values().map(|s| s.stated_instances).sum();
    Ok((CanaryPlan { seed, entries }, report))
}

fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::Monolingual => "monolingual",
        Setting::Parallel => "parallel",
        Setting::Pairwise => "pairwise",
        Setting::Generic => "generic",
    }
}

/// Real token sequences that canaries are derived from.
#[derive(Debug, Clone, Default)]
pub struct CanarySources {
    pub monolingual: BTreeMap<String, Vec<Vec<u32>>>,
    /// Target-side sequences per target language.
    pub parallel_targets: BTreeMap<String, Vec<Vec<u32>>>,
    /// (source, target) sequences per `src-tgt` pair.
    pub pairs: BTreeMap<String, Vec<(Vec<u32>, Vec<u32>)>>,
    pub qualifying_langs: Vec<String>,
    pub vocab_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub emitted: u64,
    pub instances: u64,
    /// Canaries that could not be produced, by `key/type/reason`.
    pub skipped: BTreeMap<String, u64>,
    /// Documents too short for a training prefix, per language.
    pub short_documents: BTreeMap<String, u64>,
}

impl GenerationReport {
    fn skip(&mut self, key: &str, kind: CanaryType, reason: &str) {
        *self.skipped.entry(format!("{key}/{kind}/{reason}")).or_insert(0) += 1;
    }
}

fn two_distinct<'a, T, R: Rng>(items: &'a [T], rng: &mut R) -> Option<(&'a T, &'a T)> {
    if items.len() < 2 {
        return None;
    }
    let i = rng.gen_range(0..items.len());
    let mut j = rng.gen_range(0..items.len() - 1);
    if j >= i {
        j += 1;
    }
    Some((&items[i], &items[j]))
}

impl CanaryPlan {
    /// Generate every canary of one plan entry, in slot order.
    pub fn generate_entry(&self, entry: &LangPlan, src: &CanarySources, report: &mut GenerationReport) -> Vec<CanarySpec> {
        let label = format!("{}/{}", setting_name(entry.setting), entry.key);
        let mut rng = rng_for(self.seed, &label);
        let seed = seed_id(self.seed, &label);
        let v = src.vocab_size.max(1);
        let empty = Vec::new();
        let mut out = Vec::with_capacity(entry.slots.len());

        let shared_prefix: Option<Vec<u32>> = match entry.setting {
            Setting::Parallel => Some(random_tokens(PREFIX_LEN, v, &mut rng)),
            Setting::Generic => entry.prefix_len.map(|n| random_tokens(n, v, &mut rng)),
            _ => None,
        };
        let (long_docs, short) = match entry.setting {
            Setting::Monolingual => {
                let docs = src.monolingual.get(&entry.key).unwrap_or(&empty);
                let long: Vec<&Vec<u32>> = docs.iter().filter(|d| d.len() >= PREFIX_LEN).collect();
                let short = docs.len() - long.len();
                (long, short)
            }
            _ => (Vec::new(), 0),
        };
        if short > 0 && entry.slots.iter().any(|s| s.0 == CanaryType::TrainingPrefix) {
            report.short_documents.insert(entry.key.clone(), short as u64);
        }

        for (idx, &(kind, repeats)) in entry.slots.iter().enumerate() {
            let produced: Option<(Payload, Option<String>)> = match entry.setting {
                Setting::Monolingual => {
                    let docs = src.monolingual.get(&entry.key).unwrap_or(&empty);
                    match kind {
                        CanaryType::Shuffle => docs.choose(&mut rng).map(|d| Payload::Mono(gen_shuffle(d, &mut rng))),
                        CanaryType::Interleave => {
                            two_distinct(docs, &mut rng).map(|(a, b)| Payload::Mono(gen_interleave(a, b, MONO_CHUNK)))
                        }
                        CanaryType::TrainingPrefix => long_docs
                            .choose(&mut rng)
                            .and_then(|d| gen_training_prefix(d, PREFIX_LEN, v, &mut rng))
                            .map(Payload::Mono),
                        _ => None,
                    }
                    .map(|p| (p, None))
                }
                Setting::Parallel => {
                    let targets = src.parallel_targets.get(&entry.key).unwrap_or(&empty);
                    let picked = match kind {
                        CanaryType::RandomPrefixInterleave | CanaryType::FullyRandomInterleave => {
                            two_distinct(targets, &mut rng).map(|(a, b)| (a, Some(b.as_slice())))
                        }
                        _ => targets.choose(&mut rng).map(|a| (a, None)),
                    };
                    picked.and_then(|(a, b)| {
                        gen_parallel_canary(kind, a, b, shared_prefix.as_deref(), v, &mut rng)
                            .ok()
                            .map(|(source, target)| (Payload::Parallel { source, target }, None))
                    })
                }
                Setting::Pairwise => {
                    let pairs = src.pairs.get(&entry.key).map(Vec::as_slice).unwrap_or(&[]);
                    let (sl, tl) = entry.key.split_once('-').unwrap_or((&entry.key, ""));
                    two_distinct(pairs, &mut rng).and_then(|(a, b)| {
                        gen_pairwise_canary(kind, (&a.0, &a.1), (&b.0, &b.1), (sl, tl), &src.qualifying_langs, &mut rng)
                            .ok()
                            .map(|c| (Payload::Parallel { source: c.source, target: c.target }, Some(c.target_label)))
                    })
                }
                Setting::Generic => {
                    let mut tokens = shared_prefix.clone().unwrap_or_default();
                    tokens.extend(random_tokens(GENERIC_LEN - tokens.len(), v, &mut rng));
                    Some((Payload::Mono(tokens), None))
                }
            };
            let Some((payload, target_label)) = produced else {
                report.skip(&entry.key, kind, "not enough source sequences");
                continue;
            };
            let (lang, lang_pair) = match entry.setting {
                Setting::Monolingual | Setting::Parallel => (Some(entry.key.clone()), None),
                Setting::Pairwise => (None, Some(entry.key.clone())),
                Setting::Generic => (None, None),
            };
            out.push(CanarySpec {
                canary_id: format!("{}-{idx:06}", label_id(&entry.key, entry.setting)),
                lang,
                lang_pair,
                target_label,
                kind,
                repeats,
                tier: entry.tier.clone(),
                prefix_len: entry.prefix_len,
                payload,
                seed,
            });
        }
        report.emitted += out.len() as u64;
        report.instances += out.iter().map(|c| c.repeats).sum::<u64>();
        out
    }

    /// Lazily generate all canaries, entry by entry.
    pub fn generate<'a>(
        &'a self,
        src: &'a CanarySources,
        report: &'a mut GenerationReport,
    ) -> impl Iterator<Item = CanarySpec> + 'a {
        let mut entries = self.entries.iter();
        let mut buf = std::collections::VecDeque::new();
        std::iter::from_fn(move || loop {
            if let Some(c) = buf.pop_front() {
                return Some(c);
            }
            let e = entries.next()?;
            buf.extend(self.generate_entry(e, src, report));
        })
    }
}

fn label_id(key: &str, setting: Setting) -> String {
    let prefix = match setting {
        Setting::Monolingual => "mono",
        Setting::Parallel => "par",
        Setting::Pairwise => "pair",
        Setting::Generic => "gen",
    };
    format!("{prefix}-{key}")
}

/// Serialize a canary as a JSON Lines record with decoded text.
pub fn canary_record(c: &CanarySpec, decode: &dyn Fn(&[u32]) -> String) -> serde_json::Value {
    let mut v = serde_json::json!({
        "canary_id": c.canary_id,
        "type": c.kind,
        "repeats": c.repeats,
        "seed": c.seed,
    });
    let m = v.as_object_mut().expect("object");
    if let Some(l) = &c.lang {
        m.insert("lang".into(), l.clone().into());
    }
    if let Some(l) = &c.lang_pair {
        m.insert("lang_pair".into(), l.clone().into());
    }
    if let Some(l) = &c.target_label {
        m.insert("target_label".into(), l.clone().into());
    }
    if let Some(t) = &c.tier {
        m.insert("tier".into(), t.clone().into());
    }
    if let Some(p) = c.prefix_len {
        m.insert("prefix_len".into(), p.into());
    }
    match &c.payload {
        Payload::Mono(t) => {
            m.insert("text".into(), decode(t).into());
        }
        Payload::Parallel { source, target } => {
            m.insert("src_text".into(), decode(source).into());
            m.insert("tgt_text".into(), decode(target).into());
        }
    }
    v
}
