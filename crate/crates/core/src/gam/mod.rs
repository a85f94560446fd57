//! Additive spline model from per-token features to importance percentiles.
//!
//! `percentile = beta0 + s_a(angular) + s_m(magnitude) + s_d(dimensional)
//! + s_p(position)`, each `s` a cubic B-spline with a second-difference
//! penalty on its coefficients, centered over the training data.

mod basis;
mod fit;
mod model;

pub use basis::{build_spline_basis, CubicBasis};
pub use fit::{fit_gam, fit_gam_with_lambdas, GamOptions, DEFAULT_SEED};
pub use model::{load_model, model_from_json, model_to_json, save_model, GamModel, SmoothTerm, TrainingMeta};

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scoring::{analyze_prompt, AnalysisConfig, PromptAnalysis};

/// Feature names in term order.
pub const FEATURES: [&str; 4] = ["angular", "magnitude", "dimensional", "position"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub a: f64,
    pub m: f64,
    pub d_score: f64,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_percentile: Option<f64>,
    /// Rows sharing a group id stay in the same cross-validation fold.
    #[serde(default)]
    pub group: usize,
}

impl FeatureRow {
    pub fn features(&self) -> [f64; 4] {
        [self.a, self.m, self.d_score, self.p]
    }
}

/// `100 * index / (n - 1)`; a lone token sits at 50.
pub fn position_percentile(index: usize, n: usize) -> Result<f64> {
    if index >= n {
        return Err(Error::IndexOutOfRange { index, len: n });
    }
    if n == 1 {
        return Ok(50.0);
    }
    Ok(100.0 * index as f64 / (n - 1) as f64)
}

/// Within-prompt percentile ranks, 100 for the largest value. Ties share the
/// mean of their ranks; a single value gets 100.
pub fn target_percentiles(composites: &[f64]) -> Vec<f64> {
    let n = composites.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![100.0];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| composites[i].total_cmp(&composites[j]).then(i.cmp(&j)));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && composites[order[end]] == composites[order[start]] {
            end += 1;
        }
        // 0-based ranks start..end-1, mean rank (start + end - 1) / 2
        let mean_rank = (start + end - 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = 100.0 * mean_rank / (n - 1) as f64;
        }
        start = end;
    }
    out
}

/// Feature rows for one analyzed prompt; targets are its composite ranks.
pub fn analysis_rows(analysis: &PromptAnalysis, group: usize) -> Vec<FeatureRow> {
    let n = analysis.len();
    let targets = target_percentiles(&analysis.composites());
    analysis
        .breakdowns
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(k, (b, target))| FeatureRow {
            a: b.angular,
            m: b.magnitude,
            d_score: b.dimensional,
            p: position_percentile(k, n).expect("k < n"),
            target_percentile: Some(target),
            group,
        })
        .collect()
}

/// Analyzes each prompt and emits one row per scored token. Prompts that fail
/// analysis are skipped with a warning.
pub fn generate_training_data<S: AsRef<str>>(
    corpus: &[S],
    table: &EmbeddingTable,
    config: &AnalysisConfig,
) -> Result<Vec<FeatureRow>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rows = Vec::new();
    let mut used = 0;
    for (i, prompt) in corpus.iter().enumerate() {
        match analyze_prompt(prompt.as_ref(), table, config) {
            Ok(analysis) => {
                rows.extend(analysis_rows(&analysis, i));
                used += 1;
            }
            Err(e) => log::warn!("corpus prompt {}: skipped ({e})", i + 1),
        }
    }
    if used == 0 {
        return Err(Error::NoUsablePrompts);
    }
    Ok(rows)
}

/// Corpus file: one prompt per line, blank lines ignored.
pub fn parse_corpus(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect()
}

pub fn read_corpus(path: impl AsRef<std::path::Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_corpus(&text))
}

pub fn predict_percentile(model: &GamModel, a: f64, m: f64, d_score: f64, p: f64) -> f64 {
    model.predict([a, m, d_score, p])
}

/// Term `term_index` evaluated on `grid_size` evenly spaced points over its
/// training range, endpoints included.
pub fn export_partial_dependence(model: &GamModel, term_index: usize, grid_size: usize) -> Result<Vec<(f64, f64)>> {
    let term = model
        .terms
        .get(term_index)
        .ok_or(Error::IndexOutOfRange { index: term_index, len: model.terms.len() })?;
    let (lo, hi) = (term.feature_min, term.feature_max);
    Ok(match grid_size {
        0 => Vec::new(),
        1 => vec![(lo, term.eval(lo))],
        _ => (0..grid_size)
            .map(|i| {
                let x = if i == grid_size - 1 { hi } else { lo + (hi - lo) * i as f64 / (grid_size - 1) as f64 };
                (x, term.eval(x))
            })
            .collect(),
    })
}
