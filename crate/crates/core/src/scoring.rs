//! Leave-one-out perturbation scores.
//!
//! For a prompt with aggregate embedding `orig` (the sum of its token
//! vectors), removing token `k` gives `pert = orig - v_k`. Three scores
//! compare the two:
//!
//! * angular: `(1 - cos(orig, pert)) / 2`, in `[0, 1]`;
//! * magnitude: `| |orig| - |pert| | / |orig|`, clamped to `[0, 1]`;
//! * dimensional: `sum_j |v_k[j]| * g(sign orig[j], sign v_k[j])`, where `g`
//!   weighs dimensions in which the token opposes the aggregate more heavily.
//!
//! The composite is their product, so a token that is negligible on any one
//! axis is negligible overall.

use serde::{Deserialize, Serialize};

use crate::digest::config_digest;
use crate::embeddings::{aggregate, resolve, EmbeddingTable, OovPolicy, ResolvedToken, Vector};
use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Execution};
use crate::preprocess::{tokenize, PreprocessConfig, Token};

/// Weights of the sign-contrast function inside the dimensional score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    /// Weight when the token and the aggregate disagree in sign.
    pub opposite_sign_weight: f64,
    /// Weight when they agree in sign.
    pub same_sign_weight: f64,
    /// Weight when either component is exactly zero.
    pub zero_sign_weight: f64,
    pub magnitude_clamp: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            opposite_sign_weight: 2.0,
            same_sign_weight: 1.0,
            zero_sign_weight: 1.0,
            magnitude_clamp: true,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.opposite_sign_weight, self.same_sign_weight, self.zero_sign_weight];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("sign weights must be finite and non-negative".into()));
        }
        if self.opposite_sign_weight < 1.0 {
            return Err(Error::InvalidArgument("opposite-sign weight must be at least 1".into()));
        }
        if self.opposite_sign_weight < self.same_sign_weight {
            return Err(Error::InvalidArgument(
                "opposite-sign weight must not be below the same-sign weight".into(),
            ));
        }
        Ok(())
    }

    fn sign_weight(&self, orig: f64, tok: f64) -> f64 {
        if orig == 0.0 || tok == 0.0 {
            self.zero_sign_weight
        } else if (orig > 0.0) != (tok > 0.0) {
            self.opposite_sign_weight
        } else {
            self.same_sign_weight
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub angular: f64,
    pub magnitude: f64,
    pub dimensional: f64,
    pub composite: f64,
    pub cos_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angular {
    pub score: f64,
    pub cos_theta: f64,
}

pub fn perturbed_embedding(e_orig: &Vector, e_tok: &Vector) -> Result<Vector> {
    e_orig.check_dim(e_tok)?;
    Ok(Vector::new(e_orig.as_slice().iter().zip(e_tok.as_slice()).map(|(o, t)| o - t).collect()))
}

/// Direction change between the aggregate and the perturbed aggregate.
///
/// A zero perturbed vector (the removed token was all there was) scores 1
/// with `cos_theta = -1`. A zero aggregate is a degenerate prompt.
pub fn angular_score(e_orig: &Vector, e_pert: &Vector) -> Result<Angular> {
    e_orig.check_dim(e_pert)?;
    let orig_norm = e_orig.norm();
    if orig_norm == 0.0 {
        return Err(Error::DegeneratePrompt);
    }
    Ok(angular_with_norm(e_orig, orig_norm, e_pert))
}

fn angular_with_norm(e_orig: &Vector, orig_norm: f64, e_pert: &Vector) -> Angular {
    if e_pert == e_orig {
        return Angular { score: 0.0, cos_theta: 1.0 };
    }
    let pert_norm = e_pert.norm();
    if pert_norm == 0.0 {
        return Angular { score: 1.0, cos_theta: -1.0 };
    }
    let cos_theta = (e_orig.dot(e_pert) / (orig_norm * pert_norm)).clamp(-1.0, 1.0);
    Angular { score: (1.0 - cos_theta) / 2.0, cos_theta }
}

/// Relative change in aggregate length.
pub fn magnitude_score(e_orig: &Vector, e_pert: &Vector, config: &ScoringConfig) -> Result<f64> {
    e_orig.check_dim(e_pert)?;
    let orig_norm = e_orig.norm();
    if orig_norm == 0.0 {
        return Err(Error::DegeneratePrompt);
    }
    Ok(magnitude_with_norm(orig_norm, e_pert.norm(), config))
}

fn magnitude_with_norm(orig_norm: f64, pert_norm: f64, config: &ScoringConfig) -> f64 {
    let score = (orig_norm - pert_norm).abs() / orig_norm;
    if config.magnitude_clamp && score > 1.0 {
        log::debug!("magnitude score {score} clamped to 1");
        1.0
    } else {
        score
    }
}

/// Sign-weighted L1 mass of the token vector.
pub fn dimensional_score(e_orig: &Vector, e_tok: &Vector, config: &ScoringConfig) -> Result<f64> {
    e_orig.check_dim(e_tok)?;
    Ok(e_orig
        .as_slice()
        .iter()
        .zip(e_tok.as_slice())
        .map(|(&o, &t)| t.abs() * config.sign_weight(o, t))
        .sum())
}

pub fn composite_score(angular: f64, magnitude: f64, dimensional: f64) -> f64 {
    angular * magnitude * dimensional
}

/// All scores for one token against a precomputed aggregate.
pub fn score_token(e_orig: &Vector, e_tok: &Vector, config: &ScoringConfig) -> Result<ScoreBreakdown> {
    let orig_norm = e_orig.norm();
    if orig_norm == 0.0 {
        return Err(Error::DegeneratePrompt);
    }
    score_with_norm(e_orig, orig_norm, e_tok, config)
}

fn score_with_norm(e_orig: &Vector, orig_norm: f64, e_tok: &Vector, config: &ScoringConfig) -> Result<ScoreBreakdown> {
    let e_pert = perturbed_embedding(e_orig, e_tok)?;
    let Angular { score: angular, cos_theta } = angular_with_norm(e_orig, orig_norm, &e_pert);
    let magnitude = magnitude_with_norm(orig_norm, e_pert.norm(), config);
    let dimensional = dimensional_score(e_orig, e_tok, config)?;
    Ok(ScoreBreakdown {
        angular,
        magnitude,
        dimensional,
        composite: composite_score(angular, magnitude, dimensional),
        cos_theta,
    })
}

/// Everything that determines an analysis result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub preprocess: PreprocessConfig,
    pub scoring: ScoringConfig,
    pub oov: OovPolicy,
}

impl AnalysisConfig {
    pub fn digest(&self) -> String {
        config_digest(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptAnalysis {
    pub prompt: String,
    /// Tokens as produced by the tokenizer, before OOV filtering.
    pub tokens: Vec<Token>,
    pub resolved: Vec<ResolvedToken>,
    pub e_orig: Vector,
    /// One entry per element of `resolved`.
    pub breakdowns: Vec<ScoreBreakdown>,
    pub table_provenance: String,
    pub config_digest: String,
}

impl PromptAnalysis {
    pub fn len(&self) -> usize {
        self.breakdowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakdowns.is_empty()
    }

    pub fn composites(&self) -> Vec<f64> {
        self.breakdowns.iter().map(|b| b.composite).collect()
    }
}

pub fn analyze_prompt(text: &str, table: &EmbeddingTable, config: &AnalysisConfig) -> Result<PromptAnalysis> {
    analyze_prompt_with(text, table, config, Execution::default())
}

/// Like [`analyze_prompt`] with an explicit execution mode. Output does not
/// depend on the mode.
pub fn analyze_prompt_with(
    text: &str,
    table: &EmbeddingTable,
    config: &AnalysisConfig,
    execution: Execution,
) -> Result<PromptAnalysis> {
    config.scoring.validate()?;
    let tokens = tokenize(text, &config.preprocess)?;
    let resolved = resolve(table, &tokens, config.oov)?;
    let e_orig = aggregate(&resolved)?;
    let orig_norm = e_orig.norm();
    if orig_norm == 0.0 {
        return Err(Error::DegeneratePrompt);
    }
    let breakdowns = map_indexed(resolved.len(), execution, |k| {
        score_with_norm(&e_orig, orig_norm, &resolved[k].vector, &config.scoring)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(PromptAnalysis {
        prompt: text.to_string(),
        tokens,
        resolved,
        e_orig,
        breakdowns,
        table_provenance: table.source_id().to_string(),
        config_digest: config.digest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    #[test]
    fn perturbation_is_subtraction() {
        assert_eq!(perturbed_embedding(&v(&[4.0, 6.0]), &v(&[3.0, 4.0])).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(perturbed_embedding(&v(&[4.0, 6.0]), &v(&[0.0, 0.0])).unwrap(), v(&[4.0, 6.0]));
        assert!(matches!(
            perturbed_embedding(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn angular_reference_points() {
        let a = v(&[1.0, 0.0]);
        assert_eq!(angular_score(&a, &a).unwrap().score, 0.0);
        assert_eq!(angular_score(&a, &v(&[-1.0, 0.0])).unwrap().score, 1.0);
        let orth = angular_score(&a, &v(&[0.0, 1.0])).unwrap();
        assert_eq!(orth.cos_theta, 0.0);
        assert_eq!(orth.score, 0.5);
    }

    #[test]
    fn angular_degenerate_cases() {
        let zero = v(&[0.0, 0.0]);
        let pert = angular_score(&v(&[1.0, 2.0]), &zero).unwrap();
        assert_eq!((pert.score, pert.cos_theta), (1.0, -1.0));
        assert!(matches!(angular_score(&zero, &v(&[1.0, 0.0])), Err(Error::DegeneratePrompt)));
    }

    #[test]
    fn magnitude_reference_points() {
        let cfg = ScoringConfig::default();
        let orig = v(&[3.0, 4.0]);
        assert_eq!(magnitude_score(&orig, &orig, &cfg).unwrap(), 0.0);
        assert_abs_diff_eq!(magnitude_score(&orig, &v(&[0.0, 4.0]), &cfg).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(magnitude_score(&orig, &v(&[0.0, 0.0]), &cfg).unwrap(), 1.0);
        assert!(matches!(magnitude_score(&v(&[0.0, 0.0]), &orig, &cfg), Err(Error::DegeneratePrompt)));
    }

    #[test]
    fn magnitude_clamp_only_when_enabled() {
        // pert three times as long as orig
        let orig = v(&[1.0, 0.0]);
        let pert = v(&[-3.0, 0.0]);
        assert_eq!(magnitude_score(&orig, &pert, &ScoringConfig::default()).unwrap(), 1.0);
        let raw = ScoringConfig { magnitude_clamp: false, ..ScoringConfig::default() };
        assert_eq!(magnitude_score(&orig, &pert, &raw).unwrap(), 2.0);
    }

    #[test]
    fn dimensional_reference_points() {
        let cfg = ScoringConfig::default();
        assert_eq!(dimensional_score(&v(&[2.0, -1.0]), &v(&[0.0, 0.0]), &cfg).unwrap(), 0.0);
        assert_eq!(dimensional_score(&v(&[2.0, -1.0]), &v(&[0.5, 0.5]), &cfg).unwrap(), 1.5);
        let tok = v(&[0.3, -0.7, 1.1]);
        assert_abs_diff_eq!(
            dimensional_score(&v(&[1.0, -2.0, 0.5]), &tok, &cfg).unwrap(),
            tok.l1_norm(),
            epsilon = 1e-15
        );
        // zero components take the zero-sign weight
        let cfg = ScoringConfig { zero_sign_weight: 0.5, ..cfg };
        assert_eq!(dimensional_score(&v(&[0.0, 1.0]), &v(&[2.0, 1.0]), &cfg).unwrap(), 2.0);
    }

    #[test]
    fn composite_products() {
        assert_eq!((composite_score(0.89, 0.76, 15.67) * 100.0).round() / 100.0, 10.60);
        assert_abs_diff_eq!(composite_score(0.05, 0.03, 1.20), 0.0018, epsilon = 1e-15);
        assert_eq!(composite_score(0.0, 0.7, 3.0), 0.0);
        assert_eq!(composite_score(0.7, 0.0, 3.0), 0.0);
        assert_eq!(composite_score(0.7, 0.3, 0.0), 0.0);
    }

    #[test]
    fn zero_token_annihilates() {
        let b = score_token(&v(&[0.3, -1.2, 0.9]), &v(&[0.0, 0.0, 0.0]), &ScoringConfig::default()).unwrap();
        assert_eq!((b.angular, b.magnitude, b.dimensional, b.composite), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(ScoringConfig::default().validate().is_ok());
        let bad = ScoringConfig { opposite_sign_weight: 0.5, ..ScoringConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ScoringConfig { same_sign_weight: 3.0, ..ScoringConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ScoringConfig { zero_sign_weight: f64::NAN, ..ScoringConfig::default() };
        assert!(bad.validate().is_err());
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            [
                ("cat", vec![0.5, 1.0, -0.2]),
                ("dog", vec![0.4, 0.9, 0.1]),
                ("the", vec![0.05, -0.02, 0.01]),
                ("void", vec![0.0, 0.0, 0.0]),
                ("up", vec![1.0, 0.0, 0.0]),
                ("down", vec![-1.0, 0.0, 0.0]),
            ],
            "mem",
        )
        .unwrap()
    }

    #[test]
    fn single_token_prompt() {
        let a = analyze_prompt("cat", &table(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!((a.breakdowns[0].angular, a.breakdowns[0].magnitude), (1.0, 1.0));
    }

    #[test]
    fn identical_tokens_score_identically() {
        let a = analyze_prompt("dog dog", &table(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.breakdowns[0], a.breakdowns[1]);
    }

    #[test]
    fn degenerate_prompts() {
        let cfg = AnalysisConfig::default();
        assert!(matches!(analyze_prompt("up down", &table(), &cfg), Err(Error::DegeneratePrompt)));
        assert!(matches!(analyze_prompt("void", &table(), &cfg), Err(Error::DegeneratePrompt)));
        assert!(matches!(analyze_prompt("zzz", &table(), &cfg), Err(Error::DegeneratePrompt)));
        assert!(matches!(analyze_prompt(" ", &table(), &cfg), Err(Error::EmptyPrompt)));
        let strict = AnalysisConfig { oov: OovPolicy::Error, ..AnalysisConfig::default() };
        assert!(matches!(analyze_prompt("cat zzz", &table(), &strict), Err(Error::OutOfVocabulary(_))));
    }

    #[test]
    fn oov_zero_token_scores_zero() {
        let a = analyze_prompt("cat zzz dog", &table(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.breakdowns[1].composite, 0.0);
        assert!(a.breakdowns[0].composite > 0.0);
    }

    #[test]
    fn analysis_records_provenance() {
        let cfg = AnalysisConfig::default();
        let a = analyze_prompt("the cat", &table(), &cfg).unwrap();
        assert_eq!(a.table_provenance, "mem");
        assert_eq!(a.config_digest, cfg.digest());
        assert_eq!(a.e_orig, aggregate(&a.resolved).unwrap());
    }

    #[test]
    fn invalid_scoring_config_is_rejected() {
        let cfg = AnalysisConfig {
            scoring: ScoringConfig { opposite_sign_weight: 0.2, ..ScoringConfig::default() },
            ..AnalysisConfig::default()
        };
        assert!(matches!(analyze_prompt("cat", &table(), &cfg), Err(Error::InvalidArgument(_))));
    }
}
