mod common;

use embedscope::embeddings::{aggregate, resolve};
use embedscope::gap::{coverage_score, gap_report, match_tokens, GapConfig};
use embedscope::relevance::{build_map, render_json};
use embedscope::scoring::{
    analyze_prompt_with, angular_score, dimensional_score, magnitude_score, perturbed_embedding, score_token,
};
use embedscope::{tokenize, AnalysisConfig, Execution, PreprocessConfig, ScoringConfig, Vector};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (vec(-1.0f64..1.0, dim), vec(-1.0f64..1.0, dim))
}

proptest! {
    #[test]
    fn scores_stay_in_range((orig, tok) in pair(8)) {
        let orig = Vector::new(orig);
        let tok = Vector::new(tok);
        prop_assume!(orig.norm() > 0.0);
        let b = score_token(&orig, &tok, &ScoringConfig::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&b.angular));
        prop_assert!((0.0..=1.0).contains(&b.magnitude));
        prop_assert!(b.dimensional >= 0.0);
        prop_assert!((-1.0..=1.0).contains(&b.cos_theta));
        prop_assert_eq!(b.composite, b.angular * b.magnitude * b.dimensional);
    }

    #[test]
    fn angular_and_magnitude_ignore_scale((a, b) in pair(6), c in 1e-3f64..1e3) {
        let (a, b) = (Vector::new(a), Vector::new(b));
        prop_assume!(a.norm() > 1e-6 && b.norm() > 1e-6);
        let cfg = ScoringConfig::default();
        let base = angular_score(&a, &b).unwrap().score;
        let scaled = angular_score(&a.scaled(c), &b.scaled(c)).unwrap().score;
        prop_assert!((base - scaled).abs() <= 1e-9);
        let base = magnitude_score(&a, &b, &cfg).unwrap();
        let scaled = magnitude_score(&a.scaled(c), &b.scaled(c), &cfg).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9);
    }

    #[test]
    fn stronger_opposite_weight_never_lowers_dimensional(
        (orig, tok) in pair(10),
        w in 1.0f64..5.0,
        extra in 0.0f64..5.0,
    ) {
        let (orig, tok) = (Vector::new(orig), Vector::new(tok));
        let low = ScoringConfig { opposite_sign_weight: w, ..ScoringConfig::default() };
        let high = ScoringConfig { opposite_sign_weight: w + extra, ..ScoringConfig::default() };
        prop_assert!(dimensional_score(&orig, &tok, &high).unwrap() >= dimensional_score(&orig, &tok, &low).unwrap());
    }

    #[test]
    fn tokenizer_is_pure_and_ordered(text in "[a-zA-Z ,.!?'\\-]{0,60}") {
        let cfg = PreprocessConfig::default();
        let first = tokenize(&text, &cfg);
        let second = tokenize(&text, &cfg);
        prop_assert_eq!(format!("{first:?}"), format!("{second:?}"));
        if let Ok(tokens) = first {
            for w in tokens.windows(2) {
                prop_assert!(w[0].offset < w[1].offset);
                prop_assert_eq!(w[0].index + 1, w[1].index);
            }
            for t in &tokens {
                prop_assert!(!t.normalized.is_empty());
                prop_assert!(!t.normalized.chars().any(char::is_whitespace));
                prop_assert_eq!(&text[t.offset..t.offset + t.surface.len()], t.surface.as_str());
                prop_assert_eq!(cfg.normalize(&t.normalized).unwrap(), t.normalized.clone());
            }
        }
    }

    #[test]
    fn removing_a_token_equals_summing_the_rest(seed in any::<u64>(), len in 2usize..40) {
        let table = common::synthetic_table(60, 12, 3);
        let vocab = common::vocabulary(60);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_prompt(&mut rng, &vocab, len);
        let resolved = resolve(&table, &tokenize(&text, &PreprocessConfig::default()).unwrap(), Default::default()).unwrap();
        let total = aggregate(&resolved).unwrap();
        for k in 0..resolved.len() {
            let pert = perturbed_embedding(&total, &resolved[k].vector).unwrap();
            let rest: Vec<_> = resolved.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, r)| r.clone()).collect();
            let direct = aggregate(&rest).unwrap();
            for (x, y) in pert.as_slice().iter().zip(direct.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn scores_follow_tokens_not_positions(seed in any::<u64>(), len in 2usize..30) {
        let table = common::synthetic_table(40, 10, 4);
        let vocab = common::vocabulary(40);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_prompt(&mut rng, &vocab, len);
        let mut words: Vec<&str> = text.split(' ').collect();
        words.reverse();
        let reversed = words.join(" ");
        let cfg = AnalysisConfig::default();
        let a = analyze_prompt_with(&text, &table, &cfg, Execution::Sequential).unwrap();
        let b = analyze_prompt_with(&reversed, &table, &cfg, Execution::Sequential).unwrap();
        let n = a.len();
        for k in 0..n {
            let (x, y) = (&a.breakdowns[k], &b.breakdowns[n - 1 - k]);
            prop_assert!((x.angular - y.angular).abs() <= 1e-6);
            prop_assert!((x.magnitude - y.magnitude).abs() <= 1e-6);
            prop_assert!((x.dimensional - y.dimensional).abs() <= 1e-6);
            prop_assert!((x.composite - y.composite).abs() <= 1e-6 * (1.0 + x.composite));
        }
    }

    #[test]
    fn parallel_matches_sequential(seed in any::<u64>(), len in 1usize..60) {
        let table = common::synthetic_table(50, 16, 5);
        let vocab = common::vocabulary(50);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_prompt(&mut rng, &vocab, len);
        let cfg = AnalysisConfig::default();
        let seq = analyze_prompt_with(&text, &table, &cfg, Execution::Sequential).unwrap();
        let par = analyze_prompt_with(&text, &table, &cfg, Execution::Parallel).unwrap();
        prop_assert_eq!(render_json(&build_map(&seq, None, true)), render_json(&build_map(&par, None, true)));
    }

    #[test]
    fn self_coverage_is_one(seed in any::<u64>(), len in 1usize..25) {
        let table = common::synthetic_table(30, 8, 6);
        let vocab = common::vocabulary(30);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_prompt(&mut rng, &vocab, len);
        let r = gap_report(&text, &text, &table, &GapConfig::default()).unwrap();
        prop_assert_eq!(r.coverage, 1.0);
        prop_assert!(r.missing.is_empty());
    }

    #[test]
    fn higher_threshold_never_adds_matches(seed in any::<u64>(), t1 in -1.0f64..1.0, dt in 0.0f64..1.0) {
        let table = common::synthetic_table(30, 4, 7);
        let vocab = common::vocabulary(30);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = AnalysisConfig::default();
        let source = build_map(&analyze_prompt_with(&common::random_prompt(&mut rng, &vocab, 12), &table, &cfg, Execution::Sequential).unwrap(), None, true);
        let summary = build_map(&analyze_prompt_with(&common::random_prompt(&mut rng, &vocab, 5), &table, &cfg, Execution::Sequential).unwrap(), None, true);
        let loose = match_tokens(&source, &summary, &table, t1).unwrap();
        let strict = match_tokens(&source, &summary, &table, t1 + dt).unwrap();
        for m in &strict {
            prop_assert!(loose.contains(m));
        }
    }

    #[test]
    fn copying_a_missing_word_never_lowers_coverage(seed in any::<u64>()) {
        let table = common::synthetic_table(30, 6, 8);
        let vocab = common::vocabulary(30);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = common::random_prompt(&mut rng, &vocab, 10);
        let summary = common::random_prompt(&mut rng, &vocab, 3);
        let before = gap_report(&source, &summary, &table, &GapConfig::default()).unwrap();
        if let Some(word) = before.missing.first() {
            let extended = format!("{summary} {}", word.token);
            let after = gap_report(&source, &extended, &table, &GapConfig::default()).unwrap();
            prop_assert!(after.coverage >= before.coverage);
        }
    }
}

#[test]
fn coverage_of_worked_illustration() {
    // composites from the illustrative seven-token example; "ai", "processes"
    // and "language" are covered
    use embedscope::relevance::{Band, RankingSource, RelevanceEntry, RelevanceMap};
    let scores = [
        ("the", 0.0018),
        ("ai", 10.60),
        ("system", 3.01),
        ("processes", 6.94),
        ("natural", 1.06),
        ("language", 4.24),
        ("effectively", 1.74),
    ];
    let map = RelevanceMap {
        prompt: String::new(),
        table_provenance: "t".into(),
        config_digest: String::new(),
        ranking_source: RankingSource::Composite,
        tokens: scores
            .iter()
            .enumerate()
            .map(|(i, (w, c))| RelevanceEntry {
                surface: w.to_string(),
                normalized: w.to_string(),
                index: i,
                angular: 0.0,
                magnitude: 0.0,
                dimensional: 0.0,
                composite: *c,
                cos_theta: 0.0,
                display_percentile: 0.0,
                band: Band::High,
                filtered: false,
            })
            .collect(),
    };
    let matches: Vec<_> = ["ai", "processes", "language"]
        .iter()
        .map(|w| embedscope::gap::TokenMatch {
            source: w.to_string(),
            summary: w.to_string(),
            kind: embedscope::gap::MatchKind::Exact,
            similarity: 1.0,
        })
        .collect();
    let coverage = coverage_score(&map, &matches);
    // (10.60 + 6.94 + 4.24) / 27.5918
    assert!((coverage - 21.78 / 27.5918).abs() < 1e-12);
    assert_eq!((coverage * 100.0).round() / 100.0, 0.79);
}
