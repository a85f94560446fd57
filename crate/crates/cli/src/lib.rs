//! Command bodies for the `embedscope` binary. Each returns the exact bytes
//! the binary writes, so library callers and the binary agree.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use embedscope::digest::config_digest;
use embedscope::gam::{fit_gam, generate_training_data, model_to_json, GamModel, GamOptions, FEATURES};
use embedscope::gap::{gap_report_with, GapConfig};
use embedscope::relevance::{build_map, render_ansi, render_html, render_json};
use embedscope::scoring::analyze_prompt_with;
use embedscope::{AnalysisConfig, EmbeddingTable, Execution, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Ansi,
    Html,
}

/// Every effective setting of a run. Its digest is embedded in outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub embeddings: String,
    pub analysis: AnalysisConfig,
    pub filter_stopwords: bool,
    pub format: OutputFormat,
    /// Where output goes does not change it, so it stays out of the digest.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub gam_model: Option<PathBuf>,
    pub knots: usize,
    pub cv_folds: usize,
    pub seed: u64,
    pub sim_threshold: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl RunConfig {
    /// Defaults for everything except the embedding table's source id.
    pub fn new(embeddings: impl Into<String>) -> Self {
        let gam = GamOptions::default();
        RunConfig {
            embeddings: embeddings.into(),
            analysis: AnalysisConfig::default(),
            filter_stopwords: true,
            format: OutputFormat::Json,
            out: None,
            gam_model: None,
            knots: gam.knots,
            cv_folds: gam.cv_folds,
            seed: gam.seed,
            sim_threshold: embedscope::gap::DEFAULT_SIM_THRESHOLD,
            execution: Execution::default(),
        }
    }

    pub fn digest(&self) -> String {
        config_digest(self)
    }

    pub fn gam_options(&self) -> GamOptions {
        GamOptions {
            knots: self.knots,
            cv_folds: self.cv_folds,
            seed: self.seed,
            execution: self.execution,
            ..GamOptions::default()
        }
    }
}

pub fn analyze_output(text: &str, table: &EmbeddingTable, run: &RunConfig, gam: Option<&GamModel>) -> Result<String> {
    let analysis = analyze_prompt_with(text, table, &run.analysis, run.execution)?;
    let map = build_map(&analysis, gam, run.filter_stopwords).with_config_digest(run.digest());
    Ok(match run.format {
        OutputFormat::Json => render_json(&map),
        OutputFormat::Ansi => render_ansi(&map),
        OutputFormat::Html => render_html(&map),
    })
}

pub fn gap_output(source: &str, summary: &str, table: &EmbeddingTable, run: &RunConfig) -> Result<String> {
    let config = GapConfig {
        analysis: run.analysis.clone(),
        filter_stopwords: run.filter_stopwords,
        sim_threshold: run.sim_threshold,
    };
    let mut report = gap_report_with(source, summary, table, &config, run.execution)?;
    report.config_digest = run.digest();
    Ok(report.to_json())
}

pub struct Training {
    pub model: GamModel,
    /// Serialized model file contents.
    pub model_json: String,
    /// Human-readable summary: row count, chosen smoothing parameters, CV error.
    pub report: String,
}

pub fn train_output<S: AsRef<str>>(corpus: &[S], table: &EmbeddingTable, run: &RunConfig) -> Result<Training> {
    let rows = generate_training_data(corpus, table, &run.analysis)?;
    let model = fit_gam(&rows, &run.gam_options())?;
    let meta = &model.training_meta;
    let mut report = format!("rows: {}\nprompts: {}\nfolds: {}\n", meta.rows, meta.groups, meta.folds);
    for (name, term) in FEATURES.iter().zip(&model.terms) {
        report.push_str(&format!("lambda[{name}]: {}\n", term.lambda));
    }
    match meta.cv_rmse() {
        Some(rmse) => report.push_str(&format!("cv_rmse: {rmse:.6}\n")),
        None => report.push_str("cv_rmse: n/a\n"),
    }
    Ok(Training { model_json: model_to_json(&model), model, report })
}
