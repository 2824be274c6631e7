use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curate_core::canary::{gen_interleave, gen_shuffle};
use curate_core::corpus::{Document, Sentence};
use curate_core::lang::normalize_lang_code;
use curate_core::memorization::{extraction_report, ExtractionResult};
use curate_core::metrics::{chrf, levenshtein_similarity, script_profile, token_overlap, ChrfParams};
use curate_core::mono::{clean_gate, dedup_lines, pct_questionable, GateParams, QuestionableScorer};
use curate_core::parallel::{
    bt_filter, mine_multiway, mine_multiway_brute_force, overlap_filter, BtCandidate, BtParams, MatchMode,
    OverlapParams, SentencePair,
};
use curate_core::pipeline::{run_in_memory, PipelineConfig};
use curate_core::script::{fix_virama, ViramaConfig};
use curate_core::stats::compute_stats;
use curate_core::tokenize::Whitespace;
use curate_core::unimax::unimax_weights;

fn brahmic() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop_oneof![
            Just(' '),
            Just('\u{00A0}'),
            Just('\u{094D}'),
            Just('\u{09CD}'),
            Just('\u{0915}'),
            Just('\u{0937}'),
            Just('\u{093E}'),
            Just('a'),
        ],
        0..40,
    )
    .prop_map(|v| v.into_iter().collect())
}

fn words() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just("a"), Just("b"), Just("c"), Just("d"), Just("e")], 0..12)
        .prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn virama_properties(s in brahmic()) {
        let cfg = ViramaConfig::default();
        let hi = normalize_lang_code("hi").unwrap();
        let out = fix_virama(&s, &hi, &cfg);
        prop_assert_eq!(fix_virama(&out, &hi, &cfg), out.clone());
        prop_assert!(out.chars().count() <= s.chars().count());
        let strip = |t: &str| t.chars().filter(|c| !matches!(c, ' ' | '\u{00A0}')).collect::<String>();
        prop_assert_eq!(strip(&out), strip(&s));
        let en = normalize_lang_code("en").unwrap();
        prop_assert_eq!(fix_virama(&s, &en, &cfg), s);
    }

    #[test]
    fn chrf_bounds(a in "[a-e ]{0,30}", b in "[a-e ]{0,30}") {
        let p = ChrfParams::default();
        let v = chrf(&a, &b, &p);
        prop_assert!((0.0..=100.0).contains(&v));
        if !a.trim().is_empty() {
            prop_assert!((chrf(&a, &a, &p) - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn similarity_symmetry(a in proptest::collection::vec(0u32..5, 0..20), b in proptest::collection::vec(0u32..5, 0..20)) {
        prop_assert_eq!(levenshtein_similarity(&a, &b), levenshtein_similarity(&b, &a));
        prop_assert_eq!(levenshtein_similarity(&a, &a), 1.0);
        prop_assert_eq!(token_overlap(&a, &b), token_overlap(&b, &a));
        if !a.is_empty() {
            prop_assert_eq!(token_overlap(&a, &a), 1.0);
        }
    }

    #[test]
    fn script_fractions_sum_to_one(s in "[a-zA-Zа-я一-龥0-9 .,]{1,40}") {
        let p = script_profile(&s);
        if p.letters > 0 {
            let total: f64 = p.fractions().values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shuffle_and_interleave(a in proptest::collection::vec(0u32..100, 0..120), b in proptest::collection::vec(100u32..200, 0..120), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = gen_shuffle(&a, &mut rng);
        let mut sorted = a.clone();
        s.sort_unstable();
        sorted.sort_unstable();
        prop_assert_eq!(s, sorted);
        let mixed = gen_interleave(&a, &b, 50);
        let from_a: Vec<u32> = mixed.iter().copied().filter(|t| *t < 100).collect();
        let from_b: Vec<u32> = mixed.iter().copied().filter(|t| *t >= 100).collect();
        prop_assert_eq!(from_a, a);
        prop_assert_eq!(from_b, b);
    }

    #[test]
    fn overlap_spares_short_pairs(s in words(), t in words()) {
        let p = SentencePair::new("en", "fr", &s, &t, "p").unwrap();
        let short = s.split_whitespace().count().min(t.split_whitespace().count()) <= 5;
        if short {
            prop_assert!(overlap_filter(&p, &OverlapParams::default()).is_keep());
        }
    }

    #[test]
    fn multiway_matches_brute_force(rows in proptest::collection::vec((0usize..4, words(), any::<bool>()), 0..30), n in 1usize..4) {
        let langs = ["de", "fr", "es", "en"];
        let pairs: Vec<SentencePair> = rows
            .iter()
            .enumerate()
            .map(|(i, (l, en, flip))| {
                let other = format!("{}-{i}", langs[*l]);
                if *flip {
                    SentencePair::new(langs[*l], "en", &other, en, "p").unwrap()
                } else {
                    SentencePair::new("en", langs[*l], en, &other, "p").unwrap()
                }
            })
            .collect();
        for mode in [MatchMode::Exact, MatchMode::Ngram, MatchMode::Both] {
            let got = mine_multiway(&pairs, mode, n);
            prop_assert_eq!(&got, &mine_multiway_brute_force(&pairs, mode, n));
            prop_assert!(got.pairs.iter().all(|p| p.src_lang != p.tgt_lang && p.src_lang.code != "en" && p.tgt_lang.code != "en"));
        }
    }

    #[test]
    fn gate_is_monotone(flags in proptest::collection::vec(any::<bool>(), 0..30), extra in proptest::collection::vec(any::<bool>(), 0..30)) {
        let mk = |f: &[bool]| {
            let mut d = Document::new("d", normalize_lang_code("en").unwrap(), vec![]);
            d.sentences = f
                .iter()
                .map(|b| {
                    let mut s = Sentence::new("x");
                    if *b {
                        s.flags.insert("cursed".into());
                    }
                    s
                })
                .collect();
            d
        };
        let more: Vec<bool> = flags.iter().enumerate().map(|(i, f)| *f || extra.get(i).copied().unwrap_or(false)).collect();
        let p = GateParams::default();
        let (a, b) = (mk(&flags), mk(&more));
        if !clean_gate(&a, &p).is_keep() {
            prop_assert!(!clean_gate(&b, &p).is_keep());
        }
        if let Ok(score) = pct_questionable(&a) {
            let flagged = flags.iter().filter(|f| **f).count() as f64;
            prop_assert!((score * flags.len() as f64 - flagged).abs() < 1e-12);
        }
    }

    #[test]
    fn flag_sentence_is_pure(s in "[a-zA-Z0-9 ().]{0,60}") {
        let sc = QuestionableScorer::default();
        let en = normalize_lang_code("en").unwrap();
        let sent = Sentence::new(s);
        prop_assert_eq!(sc.flag_sentence(&sent, &en), sc.flag_sentence(&sent, &en));
    }

    #[test]
    fn dedup_leaves_unique_lines(docs in proptest::collection::vec(proptest::collection::vec("[ab]{1,2}", 1..5), 0..20)) {
        let docs: Vec<Document> = docs
            .into_iter()
            .enumerate()
            .map(|(i, lines)| Document::new(format!("d{i}"), normalize_lang_code("en").unwrap(), lines))
            .collect();
        let (out, report) = dedup_lines(docs);
        let mut seen = HashSet::new();
        for d in &out {
            for l in &d.lines {
                prop_assert!(seen.insert(l.trim_end().to_string()), "duplicate line {l:?}");
            }
        }
        prop_assert_eq!(report.kept + report.dropped, report.input);
    }

    #[test]
    fn stats_ignore_order(texts in proptest::collection::vec(("[a-c]{1,3}", "[a-z .]{0,30}"), 0..15), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, (l, t))| Document::from_text(format!("d{i}"), l, t).unwrap())
            .collect();
        let a = compute_stats(&docs, &Whitespace);
        docs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, compute_stats(&docs, &Whitespace));
    }

    #[test]
    fn unimax_caps(counts in proptest::collection::vec(1.0f64..1e6, 1..10), epochs in 0.5f64..20.0, frac in 0.01f64..2.0) {
        let m: BTreeMap<String, f64> = counts.iter().enumerate().map(|(i, c)| (format!("l{i}"), *c)).collect();
        let caps: f64 = counts.iter().map(|c| c * epochs).sum();
        let w = unimax_weights(&m, caps * frac, epochs).unwrap();
        for a in w.per_lang.values() {
            prop_assert!(a.epochs <= epochs * (1.0 + 1e-12));
        }
        let total: f64 = w.per_lang.values().map(|a| a.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!((w.allocated() - (caps * frac).min(caps)).abs() <= 1e-9 * caps);
    }

    #[test]
    fn rates_ignore_order(flags in proptest::collection::vec((any::<bool>(), any::<bool>(), 0usize..3), 1..40), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut results: Vec<ExtractionResult> = flags
            .iter()
            .enumerate()
            .map(|(i, (v, a, l))| ExtractionResult {
                probe_id: format!("p{i}"),
                lang: format!("l{l}"),
                verbatim: *v,
                approximate: *v || *a,
                similarity: 0.0,
                truncated: false,
            })
            .collect();
        let before = extraction_report(&results);
        results.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(before, extraction_report(&results));
    }
}

#[test]
fn bt_degenerate_thresholds_keep_everything() {
    // Open ratio bounds: both sides need at least one token.
    let p = BtParams { min_roundtrip: 0.0, max_copy: 1.0, ratio_min: 0.0, ratio_max: f64::INFINITY, check_langid: false };
    for (nat, bt, rt) in [("a b c", "a b c", "x"), ("hello there", "hallo", ""), ("one", "two three four five six", "")] {
        let c = BtCandidate {
            natural_target: nat.into(),
            bt_source: bt.into(),
            roundtrip_target: rt.into(),
            src_lang: normalize_lang_code("de").unwrap(),
            tgt_lang: normalize_lang_code("en").unwrap(),
        };
        assert!(bt_filter(&c, &p, &ChrfParams::default(), None).is_keep(), "{nat:?} / {bt:?}");
    }
}

#[test]
fn report_chain_and_provenance() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_corpus.jsonl")).unwrap();
    let docs = curate_core::corpus::read_jsonl(text.as_bytes()).unwrap();
    let ids: HashSet<String> = docs.iter().map(|d| d.id.clone()).collect();
    let (out, reports, _) = run_in_memory(&PipelineConfig::default(), docs).unwrap();
    for w in reports.windows(2) {
        assert_eq!(w[1].input, w[0].kept, "{} -> {}", w[0].stage, w[1].stage);
    }
    assert!(out.iter().all(|d| ids.contains(&d.id)));
}
