use std::path::Path;

use serde::{Deserialize, Serialize};

use super::basis::CubicBasis;
use super::FEATURES;
use crate::error::{Error, Result};

const FORMAT: &str = "embedscope-gam/1";

/// One fitted smooth function. Coefficients are already centered, so the
/// term averages to zero over the training feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermRecord", into = "TermRecord")]
pub struct SmoothTerm {
    pub feature: String,
    pub knots: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub feature_min: f64,
    pub feature_max: f64,
    basis: CubicBasis,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    feature: String,
    lambda: f64,
    feature_min: f64,
    feature_max: f64,
    knots: Vec<f64>,
    coefficients: Vec<f64>,
}

impl TryFrom<TermRecord> for SmoothTerm {
    type Error = String;

    fn try_from(r: TermRecord) -> Result<Self, String> {
        SmoothTerm::new(r.feature, r.knots, r.coefficients, r.lambda, r.feature_min, r.feature_max)
            .map_err(|e| e.to_string())
    }
}

impl From<SmoothTerm> for TermRecord {
    fn from(t: SmoothTerm) -> Self {
        TermRecord {
            feature: t.feature,
            lambda: t.lambda,
            feature_min: t.feature_min,
            feature_max: t.feature_max,
            knots: t.knots,
            coefficients: t.coefficients,
        }
    }
}

impl SmoothTerm {
    pub fn new(
        feature: String,
        knots: Vec<f64>,
        coefficients: Vec<f64>,
        lambda: f64,
        feature_min: f64,
        feature_max: f64,
    ) -> Result<Self> {
        let basis = CubicBasis::new(&knots)?;
        if coefficients.len() != basis.size() {
            return Err(Error::InvalidArgument(format!(
                "{} knots need {} coefficients, found {}",
                knots.len(),
                basis.size(),
                coefficients.len()
            )));
        }
        let finite = coefficients.iter().chain([&lambda, &feature_min, &feature_max]).all(|v| v.is_finite());
        if !finite || lambda < 0.0 || feature_min > feature_max {
            return Err(Error::InvalidArgument("term values must be finite with lambda >= 0".into()));
        }
        Ok(SmoothTerm { feature, knots, coefficients, lambda, feature_min, feature_max, basis })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.basis.combine(&self.coefficients, x)
    }

    /// Sum of squared second differences of the coefficients.
    pub fn roughness(&self) -> f64 {
        self.coefficients.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub rows: usize,
    pub groups: usize,
    pub folds: usize,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    /// Cross-validated mean squared error at the chosen smoothing parameters;
    /// absent when no cross-validation ran.
    pub cv_mse: Option<f64>,
}

impl TrainingMeta {
    pub fn cv_rmse(&self) -> Option<f64> {
        self.cv_mse.map(f64::sqrt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GamModel {
    format: String,
    pub beta0: f64,
    /// Angular, magnitude, dimensional, position.
    pub terms: Vec<SmoothTerm>,
    pub training_meta: TrainingMeta,
}

impl GamModel {
    pub fn new(beta0: f64, terms: Vec<SmoothTerm>, training_meta: TrainingMeta) -> Result<Self> {
        let model = GamModel { format: FORMAT.to_string(), beta0, terms, training_meta };
        model.validate().map_err(Error::InvalidArgument)?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), String> {
        if self.format != FORMAT {
            return Err(format!("unsupported format {:?}", self.format));
        }
        if !self.beta0.is_finite() {
            return Err("beta0 is not finite".into());
        }
        let names: Vec<&str> = self.terms.iter().map(|t| t.feature.as_str()).collect();
        if names != FEATURES {
            return Err(format!("expected terms {FEATURES:?}, found {names:?}"));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.lambda).collect()
    }

    /// `beta0 + sum_i s_i(features[i])`, unclamped.
    pub fn predict(&self, features: [f64; 4]) -> f64 {
        self.beta0 + self.terms.iter().zip(features).map(|(t, x)| t.eval(x)).sum::<f64>()
    }
}

/// Pretty JSON with fixed field order and a trailing newline.
pub fn model_to_json(model: &GamModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<GamModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let model: GamModel = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::ModelFormat { path, message: e.into_inner().to_string() }
    })?;
    model
        .validate()
        .map_err(|message| Error::ModelFormat { path: ".".into(), message })?;
    Ok(model)
}

pub fn save_model(model: &GamModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GamModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
