//! Importance-weighted coverage of a source text by a summary.
//!
//! Matching works on token types (normalized forms). A source type is covered
//! when the summary contains the same form, or failing that when some summary
//! type's embedding has cosine similarity at least `sim_threshold` with it
//! (the most similar one is reported). A source type weighs the largest
//! composite among its occurrences; coverage is the covered share of the total
//! weight. Stopword-filtered tokens take no part on either side.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine, EmbeddingTable};
use crate::error::{Error, Result};
use crate::parallel::{join, Execution};
use crate::relevance::{build_map, RelevanceMap};
use crate::scoring::{analyze_prompt_with, AnalysisConfig};

pub const DEFAULT_SIM_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub analysis: AnalysisConfig,
    pub filter_stopwords: bool,
    pub sim_threshold: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig { analysis: AnalysisConfig::default(), filter_stopwords: true, sim_threshold: DEFAULT_SIM_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Exact,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenMatch {
    pub source: String,
    pub summary: String,
    pub kind: MatchKind,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedToken {
    pub token: String,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub coverage: f64,
    /// Unmatched source types, most important first.
    pub missing: Vec<WeightedToken>,
    /// Summary types with no counterpart in the source.
    pub extraneous: Vec<String>,
    pub matches: Vec<TokenMatch>,
    pub sim_threshold: f64,
    pub table_provenance: String,
    pub config_digest: String,
}

impl GapReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Non-filtered types in first-occurrence order with their max composite.
fn weighted_types(map: &RelevanceMap) -> Vec<WeightedToken> {
    let mut out: Vec<WeightedToken> = Vec::new();
    for e in map.tokens.iter().filter(|e| !e.filtered) {
        match out.iter_mut().find(|w| w.token == e.normalized) {
            Some(w) => w.composite = w.composite.max(e.composite),
            None => out.push(WeightedToken { token: e.normalized.clone(), composite: e.composite }),
        }
    }
    out
}

fn check_tables(source: &RelevanceMap, summary: &RelevanceMap, table: &EmbeddingTable) -> Result<()> {
    if source.table_provenance != summary.table_provenance || source.table_provenance != table.source_id() {
        return Err(Error::TableMismatch);
    }
    Ok(())
}

fn best_similar<'a>(word: &str, candidates: &'a [WeightedToken], table: &EmbeddingTable) -> Option<(&'a str, f64)> {
    let v = table.get(word)?;
    let mut best: Option<(&str, f64)> = None;
    for c in candidates {
        let Some(sim) = table.get(&c.token).and_then(|u| cosine(v, u)) else { continue };
        if best.map_or(true, |(_, s)| sim > s) {
            best = Some((&c.token, sim));
        }
    }
    best
}

/// One match per covered source type, in source order.
pub fn match_tokens(
    source: &RelevanceMap,
    summary: &RelevanceMap,
    table: &EmbeddingTable,
    sim_threshold: f64,
) -> Result<Vec<TokenMatch>> {
    check_tables(source, summary, table)?;
    let summary_types = weighted_types(summary);
    let summary_set: HashSet<&str> = summary_types.iter().map(|w| w.token.as_str()).collect();
    let mut matches = Vec::new();
    for w in weighted_types(source) {
        if summary_set.contains(w.token.as_str()) {
            matches.push(TokenMatch { summary: w.token.clone(), source: w.token, kind: MatchKind::Exact, similarity: 1.0 });
        } else if let Some((best, sim)) = best_similar(&w.token, &summary_types, table) {
            if sim >= sim_threshold {
                matches.push(TokenMatch { source: w.token, summary: best.to_string(), kind: MatchKind::Semantic, similarity: sim });
            }
        }
    }
    Ok(matches)
}

/// Matched share of the source's importance weight; 1 when there is no
/// weight to cover.
pub fn coverage_score(source: &RelevanceMap, matches: &[TokenMatch]) -> f64 {
    let matched: HashSet<&str> = matches.iter().map(|m| m.source.as_str()).collect();
    let types = weighted_types(source);
    // Folding from +0.0: an empty float sum is -0.0.
    let total = types.iter().map(|w| w.composite).fold(0.0, |acc, c| acc + c);
    let covered =
        types.iter().filter(|w| matched.contains(w.token.as_str())).map(|w| w.composite).fold(0.0, |acc, c| acc + c);
    if total == 0.0 {
        log::warn!("source has no unfiltered importance weight; coverage defined as 1");
        return 1.0;
    }
    covered / total
}

/// Builds a report from two prepared maps.
pub fn gap_report_from_maps(
    source: &RelevanceMap,
    summary: &RelevanceMap,
    table: &EmbeddingTable,
    sim_threshold: f64,
) -> Result<GapReport> {
    let matches = match_tokens(source, summary, table, sim_threshold)?;
    let coverage = coverage_score(source, &matches);
    let matched: HashSet<&str> = matches.iter().map(|m| m.source.as_str()).collect();
    let source_types = weighted_types(source);

    let mut missing: Vec<WeightedToken> =
        source_types.iter().filter(|w| !matched.contains(w.token.as_str())).cloned().collect();
    // stable: equal composites keep source order
    missing.sort_by(|a, b| b.composite.total_cmp(&a.composite));

    let source_set: HashSet<&str> = source_types.iter().map(|w| w.token.as_str()).collect();
    let extraneous = weighted_types(summary)
        .into_iter()
        .filter(|w| !source_set.contains(w.token.as_str()))
        .filter(|w| best_similar(&w.token, &source_types, table).map_or(true, |(_, sim)| sim < sim_threshold))
        .map(|w| w.token)
        .collect();

    Ok(GapReport {
        coverage,
        missing,
        extraneous,
        matches,
        sim_threshold,
        table_provenance: source.table_provenance.clone(),
        config_digest: source.config_digest.clone(),
    })
}

pub fn gap_report(source_text: &str, summary_text: &str, table: &EmbeddingTable, config: &GapConfig) -> Result<GapReport> {
    gap_report_with(source_text, summary_text, table, config, Execution::default())
}

pub fn gap_report_with(
    source_text: &str,
    summary_text: &str,
    table: &EmbeddingTable,
    config: &GapConfig,
    execution: Execution,
) -> Result<GapReport> {
    if !config.sim_threshold.is_finite() {
        return Err(Error::InvalidArgument("similarity threshold must be finite".into()));
    }
    let (source, summary) = join(
        execution,
        || analyze_prompt_with(source_text, table, &config.analysis, execution),
        || analyze_prompt_with(summary_text, table, &config.analysis, execution),
    );
    let source = build_map(&source.map_err(|e| e.labeled("source"))?, None, config.filter_stopwords);
    let summary = build_map(&summary.map_err(|e| e.labeled("summary"))?, None, config.filter_stopwords);
    gap_report_from_maps(&source, &summary, table, config.sim_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::analyze_prompt;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            [
                ("the", vec![0.05, 0.02, 0.0]),
                ("cat", vec![1.0, 0.2, 0.0]),
                ("kitten", vec![0.9, 0.3, 0.1]),
                ("sat", vec![0.1, 1.0, 0.2]),
                ("mat", vec![0.2, -0.3, 1.0]),
                ("rocket", vec![-1.0, 0.1, -0.4]),
            ],
            "mem",
        )
        .unwrap()
    }

    fn map(text: &str) -> RelevanceMap {
        build_map(&analyze_prompt(text, &table(), &AnalysisConfig::default()).unwrap(), None, true)
    }

    #[test]
    fn identical_texts_fully_covered() {
        let r = gap_report("the cat sat on the mat", "the cat sat on the mat", &table(), &GapConfig::default()).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!(r.missing.is_empty());
        assert!(r.extraneous.is_empty());
        assert!(r.matches.iter().all(|m| m.kind == MatchKind::Exact));
        // "the" and "on" are filtered stopwords
        assert_eq!(r.matches.len(), 3);
    }

    #[test]
    fn semantic_match_above_threshold() {
        let t = table();
        let sim = cosine(t.get("cat").unwrap(), t.get("kitten").unwrap()).unwrap();
        assert!(sim > 0.9);
        let m = match_tokens(&map("cat sat"), &map("kitten"), &t, 0.7).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].source.as_str(), m[0].summary.as_str(), m[0].kind), ("cat", "kitten", MatchKind::Semantic));
        assert_eq!(m[0].similarity, sim);
        assert!(match_tokens(&map("cat sat"), &map("kitten"), &t, sim + 1e-12).unwrap().is_empty());
    }

    #[test]
    fn disjoint_summary_scores_zero() {
        let r = gap_report("cat sat", "rocket", &table(), &GapConfig::default()).unwrap();
        assert_eq!(r.coverage.to_bits(), 0.0f64.to_bits(), "coverage must be +0.0");
        assert_eq!(r.extraneous, ["rocket"]);
        assert_eq!(r.missing.len(), 2);
        assert!(r.missing[0].composite >= r.missing[1].composite);
    }

    #[test]
    fn all_filtered_source_counts_as_covered() {
        let source = map("the");
        let summary = map("cat");
        assert_eq!(coverage_score(&source, &match_tokens(&source, &summary, &table(), 0.7).unwrap()), 1.0);
    }

    #[test]
    fn table_mismatch_is_rejected() {
        let other = EmbeddingTable::from_entries([("cat", vec![1.0, 0.0, 0.0])], "other").unwrap();
        assert!(matches!(match_tokens(&map("cat"), &map("cat"), &other, 0.7), Err(Error::TableMismatch)));
    }

    #[test]
    fn errors_are_labeled() {
        let err = gap_report("cat", "", &table(), &GapConfig::default()).unwrap_err();
        assert!(err.to_string().starts_with("summary:"), "{err}");
        assert_eq!(err.kind(), crate::ErrorKind::Degenerate);
        let err = gap_report("", "cat", &table(), &GapConfig::default()).unwrap_err();
        assert!(err.to_string().starts_with("source:"), "{err}");
    }

    #[test]
    fn repeated_type_weighs_its_max_occurrence() {
        let source = map("cat sat cat");
        let types = weighted_types(&source);
        assert_eq!(types.len(), 2);
        let max_cat = source.tokens.iter().filter(|e| e.normalized == "cat").map(|e| e.composite).fold(0.0, f64::max);
        assert_eq!(types[0].composite, max_cat);
    }
}
