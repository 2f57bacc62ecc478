//! Brute-force oracles for the core algorithms.

use std::collections::BTreeSet;

use elmi_core::alignment::{edit_alignment, monotone_total, pair_weight, word_similarity, EditOp};
use elmi_core::gloss::{canonical_gloss, tokenize_gloss, TokenKind};
use elmi_core::{overlap_coefficient, overlap::gloss_word_set};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    gloss: String,
    manual_sign: usize,
    nms: usize,
    classifier: usize,
    fingerspelling: usize,
}

fn corpus() -> Vec<Golden> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/gloss_corpus.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gloss_corpus_matches_goldens() {
    let corpus = corpus();
    assert!(corpus.len() >= 30);
    for g in corpus {
        let toks = tokenize_gloss(&g.gloss).unwrap_or_else(|e| panic!("{:?}: {e}", g.gloss));
        let count = |k| toks.iter().filter(|t| t.kind == k).count();
        assert_eq!(
            (count(TokenKind::ManualSign), count(TokenKind::Nms), count(TokenKind::Classifier), count(TokenKind::Fingerspelling)),
            (g.manual_sign, g.nms, g.classifier, g.fingerspelling),
            "{:?}",
            g.gloss
        );
        for t in &toks {
            match t.kind {
                TokenKind::Nms => assert!(t.surface.starts_with('[') && t.surface.ends_with(']')),
                TokenKind::Fingerspelling => assert!(t.surface.starts_with("F-S")),
                _ => {}
            }
        }
    }
}

fn gloss_strategy() -> impl Strategy<Value = (Vec<String>, String)> {
    let manual = "[A-Z][A-Z'!,-]{0,7}".prop_filter("not a reserved prefix", |w| {
        !w.starts_with("F-S") && !["BPCL", "LCL", "DCL", "SCL", "ICL", "PCL", "BCL", "CL"].iter().any(|p| {
            w.strip_prefix(p).is_some_and(|r| r.is_empty() || r.starts_with([':', '-', '(']))
        })
    });
    let nms = "[a-zA-Z0-9 :\"()-]{0,16}".prop_map(|inner| format!("[{inner}]"));
    let classifier = ("(CL|LCL|BPCL|DCL)", "[:-][0-9A-Z]{1,2}", proptest::option::of("[a-z ]{1,10}"))
        .prop_map(|(p, h, d)| match d {
            Some(d) => format!("{p}{h} ({d})"),
            None => format!("{p}{h}"),
        });
    let fs = "[A-Z](-[A-Z]){0,6}".prop_map(|letters| format!("F-S '{letters}'"));
    let token = prop_oneof![4 => manual, 2 => nms, 1 => classifier, 1 => fs];
    let sep = prop_oneof![Just(" "), Just("  "), Just("\n"), Just(" \t ")];
    proptest::collection::vec((token, sep), 0..10).prop_map(|parts| {
        let tokens: Vec<String> = parts.iter().map(|(t, _)| t.clone()).collect();
        let raw = parts.iter().map(|(t, s)| format!("{t}{s}")).collect::<String>();
        (tokens, raw)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gloss_round_trip((tokens, raw) in gloss_strategy()) {
        let parsed = tokenize_gloss(&raw).unwrap();
        let normalized = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        prop_assert_eq!(canonical_gloss(&parsed), normalized);
        prop_assert_eq!(parsed.len(), tokens.len());
    }
}

fn brute_overlap(a: &[usize], b: &[usize]) -> (u64, u64) {
    let shared = a.iter().filter(|x| b.contains(x)).count() as u64;
    let min = a.len().min(b.len()) as u64;
    (shared, min)
}

#[test]
fn overlap_matches_set_enumeration() {
    let alphabet = ["ME", "LIKE", "BUTTER", "SMOOTH", "SAME-AS", "HOT"];
    let subsets: Vec<Vec<usize>> = (0u32..64)
        .filter(|m| m.count_ones() <= 5)
        .map(|m| (0..6).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    let mut checked = 0;
    for a in &subsets {
        for b in &subsets {
            let sa: BTreeSet<&str> = a.iter().map(|&i| alphabet[i]).collect();
            let sb: BTreeSet<&str> = b.iter().map(|&i| alphabet[i]).collect();
            let got = overlap_coefficient(&sa, &sb);
            if a.is_empty() && b.is_empty() {
                assert!(got.is_err());
                continue;
            }
            let (num, den) = brute_overlap(a, b);
            let expected = if den == 0 { Ratio::from_integer(0) } else { Ratio::new(num, den) };
            assert_eq!(got.unwrap(), expected);
            assert_eq!(overlap_coefficient(&sb, &sa).unwrap(), expected);
            checked += 1;
        }
    }
    assert_eq!(checked, 63 * 63 - 1);
}

#[test]
fn overlap_on_gloss_word_sets() {
    let a = gloss_word_set(&tokenize_gloss("ME SAME-AS BUTTER SMOOTH").unwrap());
    let b = gloss_word_set(&tokenize_gloss("SMOOTH LIKE BUTTER").unwrap());
    assert_eq!(overlap_coefficient(&a, &b).unwrap(), Ratio::new(2, 3));
}

/// Every monotone assignment of cue runs (length ≤ max_run) to lines.
fn brute_monotone(lines: &[Vec<String>], cues: &[Vec<String>], threshold: f64, max_run: usize) -> u64 {
    fn go(i: usize, next_cue: usize, lines: &[Vec<String>], cues: &[Vec<String>], th: f64, k: usize) -> u64 {
        if i == lines.len() {
            return 0;
        }
        let mut best = go(i + 1, next_cue, lines, cues, th, k);
        for a in next_cue..cues.len() {
            for b in a..cues.len().min(a + k) {
                let joined: Vec<String> = cues[a..=b].iter().flatten().cloned().collect();
                if let Some(w) = pair_weight(&lines[i], &joined, th) {
                    best = best.max(w + go(i + 1, b + 1, lines, cues, th, k));
                }
            }
        }
        best
    }
    go(0, 0, lines, cues, threshold, max_run)
}

fn random_seq(rng: &mut ChaCha8Rng, vocab: &[&str]) -> Vec<String> {
    let len = rng.gen_range(1..=4);
    (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect()
}

#[test]
fn dp_equals_exhaustive_search() {
    let vocab = ["smooth", "like", "butter", "hot", "summer", "moon"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let lines: Vec<_> = (0..rng.gen_range(0..=6)).map(|_| random_seq(&mut rng, &vocab)).collect();
        let cues: Vec<_> = (0..rng.gen_range(0..=6)).map(|_| random_seq(&mut rng, &vocab)).collect();
        for max_run in [1, 3] {
            let (dp, assigned) = monotone_total(&lines, &cues, 0.6, max_run);
            assert_eq!(dp, brute_monotone(&lines, &cues, 0.6, max_run), "{lines:?} / {cues:?}");
            let mut last = None;
            for (lo, hi) in assigned.iter().flatten() {
                assert!(lo <= hi && hi - lo < max_run);
                assert!(last.is_none_or(|l| *lo > l));
                last = Some(*hi);
            }
        }
    }
}

/// Minimal edit cost by enumerating every monotone partial pairing.
fn brute_edit_cost(lyric: &[String], asr: &[String], th: f64) -> usize {
    fn go(i: usize, j: usize, l: &[String], a: &[String], th: f64) -> usize {
        if i == l.len() || j == a.len() {
            return (l.len() - i) + (a.len() - j);
        }
        let mut best = 1 + go(i + 1, j, l, a, th);
        best = best.min(1 + go(i, j + 1, l, a, th));
        if l[i] == a[j] {
            best = best.min(go(i + 1, j + 1, l, a, th));
        } else if word_similarity(&l[i], &a[j]) >= th {
            best = best.min(1 + go(i + 1, j + 1, l, a, th));
        }
        best
    }
    go(0, 0, lyric, asr, th)
}

#[test]
fn edit_alignment_is_minimal() {
    let vocab = ["oh", "smooth", "smooth'", "like", "butter", "butta", "yeah"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..400 {
        let l: Vec<String> = (0..rng.gen_range(0..6)).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect();
        let a: Vec<String> = (0..rng.gen_range(0..6)).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect();
        let (ops, cost) = edit_alignment(&l, &a, 0.5);
        assert_eq!(cost, brute_edit_cost(&l, &a, 0.5));
        // Operations cover both sequences in order.
        let (mut ni, mut nj) = (0, 0);
        for op in ops {
            match op {
                EditOp::Pair(i, j) => {
                    assert_eq!((i, j), (ni, nj));
                    ni += 1;
                    nj += 1;
                }
                EditOp::SkipLyric(i) => {
                    assert_eq!(i, ni);
                    ni += 1;
                }
                EditOp::SkipAsr(j) => {
                    assert_eq!(j, nj);
                    nj += 1;
                }
            }
        }
        assert_eq!((ni, nj), (l.len(), a.len()));
    }
}

#[test]
fn extra_leading_token_oracle() {
    let l: Vec<String> = ["smooth", "like", "butter"].map(String::from).to_vec();
    let a: Vec<String> = ["oh", "smooth", "like", "butter"].map(String::from).to_vec();
    assert_eq!(brute_edit_cost(&l, &a, 0.5), 1);
    assert_eq!(edit_alignment(&l, &a, 0.5).1, 1);
}
