//! Ranked, banded relevance maps and their JSON / ANSI / HTML renderings.
//!
//! Bands use fixed composite thresholds: above 0.5 is high, 0.2 to 0.5
//! (inclusive) medium, below 0.2 low. The dimensional factor is unbounded, so
//! most content words of real prompts land in the high band.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gam::{position_percentile, target_percentiles, GamModel};
use crate::scoring::{PromptAnalysis, ScoreBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    High,
    Medium,
    Low,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::High => "high",
            Band::Medium => "medium",
            Band::Low => "low",
        }
    }
}

pub fn assign_band(composite: f64) -> Band {
    if composite > 0.5 {
        Band::High
    } else if composite >= 0.2 {
        Band::Medium
    } else {
        Band::Low
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingSource {
    Composite,
    GamPercentile,
}

impl RankingSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RankingSource::Composite => "composite",
            RankingSource::GamPercentile => "gam_percentile",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevanceEntry {
    pub surface: String,
    pub normalized: String,
    pub index: usize,
    pub angular: f64,
    pub magnitude: f64,
    pub dimensional: f64,
    pub composite: f64,
    pub cos_theta: f64,
    pub display_percentile: f64,
    pub band: Band,
    pub filtered: bool,
}

impl RelevanceEntry {
    pub fn breakdown(&self) -> ScoreBreakdown {
        ScoreBreakdown {
            angular: self.angular,
            magnitude: self.magnitude,
            dimensional: self.dimensional,
            composite: self.composite,
            cos_theta: self.cos_theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevanceMap {
    pub prompt: String,
    pub table_provenance: String,
    pub config_digest: String,
    pub ranking_source: RankingSource,
    /// In prompt order.
    pub tokens: Vec<RelevanceEntry>,
}

impl RelevanceMap {
    /// Entries by descending display percentile, ties by ascending index.
    pub fn ranked(&self) -> Vec<&RelevanceEntry> {
        let mut out: Vec<&RelevanceEntry> = self.tokens.iter().collect();
        out.sort_by(|a, b| {
            b.display_percentile
                .total_cmp(&a.display_percentile)
                .then(a.index.cmp(&b.index))
        });
        out
    }

    pub fn with_config_digest(mut self, digest: impl Into<String>) -> Self {
        self.config_digest = digest.into();
        self
    }

    pub fn entry(&self, normalized: &str) -> Option<&RelevanceEntry> {
        self.tokens.iter().find(|e| e.normalized == normalized)
    }
}

/// Builds the map from an analysis. Without a model the display percentile
/// is the within-prompt composite rank; with one it is the model prediction
/// clamped to `[0, 100]`.
pub fn build_map(analysis: &PromptAnalysis, gam: Option<&GamModel>, filter_stopwords: bool) -> RelevanceMap {
    let n = analysis.len();
    let percentiles = match gam {
        None => target_percentiles(&analysis.composites()),
        Some(model) => analysis
            .breakdowns
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let p = position_percentile(k, n).expect("k < n");
                model.predict([b.angular, b.magnitude, b.dimensional, p]).clamp(0.0, 100.0)
            })
            .collect(),
    };
    let tokens = analysis
        .resolved
        .iter()
        .zip(&analysis.breakdowns)
        .zip(percentiles)
        .map(|((r, b), pct)| RelevanceEntry {
            surface: r.token.surface.clone(),
            normalized: r.token.normalized.clone(),
            index: r.token.index,
            angular: b.angular,
            magnitude: b.magnitude,
            dimensional: b.dimensional,
            composite: b.composite,
            cos_theta: b.cos_theta,
            display_percentile: pct,
            band: assign_band(b.composite),
            filtered: filter_stopwords && r.token.is_stopword,
        })
        .collect();
    RelevanceMap {
        prompt: analysis.prompt.clone(),
        table_provenance: analysis.table_provenance.clone(),
        config_digest: analysis.config_digest.clone(),
        ranking_source: if gam.is_some() { RankingSource::GamPercentile } else { RankingSource::Composite },
        tokens,
    }
}

/// Seventeen significant digits, formatted like C's `%.17g`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (_, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_fraction(&fixed).to_string()
    } else {
        let (mantissa, _) = sci.split_once('e').expect("exponent");
        format!("{}e{}", trim_fraction(mantissa), exp)
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

pub fn render_json(map: &RelevanceMap) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"prompt\": {},", json_string(&map.prompt));
    let _ = writeln!(out, "  \"table_provenance\": {},", json_string(&map.table_provenance));
    let _ = writeln!(out, "  \"config_digest\": {},", json_string(&map.config_digest));
    let _ = writeln!(out, "  \"ranking_source\": \"{}\",", map.ranking_source.as_str());
    out.push_str("  \"tokens\": [");
    for (i, e) in map.tokens.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {{\"surface\": {}, \"normalized\": {}, \"index\": {}, \"angular\": {}, \"magnitude\": {}, \
             \"dimensional\": {}, \"composite\": {}, \"cos_theta\": {}, \"display_percentile\": {}, \
             \"band\": \"{}\", \"filtered\": {}}}",
            json_string(&e.surface),
            json_string(&e.normalized),
            e.index,
            format_float(e.angular),
            format_float(e.magnitude),
            format_float(e.dimensional),
            format_float(e.composite),
            format_float(e.cos_theta),
            format_float(e.display_percentile),
            e.band.as_str(),
            e.filtered,
        );
    }
    out.push_str(if map.tokens.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    out
}

pub fn parse_json(text: &str) -> Result<RelevanceMap> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::ModelFormat {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

/// Background colors, 256-color palette, white to red.
const ANSI_LEVELS: [u8; 5] = [231, 224, 217, 210, 196];

fn quintile(percentile: f64) -> usize {
    ((percentile / 20.0).floor().max(0.0) as usize).min(ANSI_LEVELS.len() - 1)
}

/// Tokens in prompt order on one line, shaded by display-percentile quintile;
/// filtered tokens are dimmed.
pub fn render_ansi(map: &RelevanceMap) -> String {
    let mut out = String::new();
    for (i, e) in map.tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let dim = if e.filtered { "2;" } else { "" };
        let surface: String = e.surface.chars().filter(|c| !c.is_control()).collect();
        let _ = write!(out, "\x1b[{dim}38;5;16;48;5;{}m{surface}\x1b[0m", ANSI_LEVELS[quintile(e.display_percentile)]);
    }
    out.push('\n');
    out
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Standalone HTML page, one `span.tok` per token with red intensity linear
/// in display percentile and the sub-scores as hover text.
pub fn render_html(map: &RelevanceMap) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<title>Token relevance</title>\n<style>\n");
    out.push_str("body { font-family: sans-serif; margin: 2em; }\n");
    out.push_str(".tokens { font-size: 1.4em; line-height: 2.2em; }\n");
    out.push_str(".tok { padding: 0.15em 0.3em; margin: 0 0.1em; border-radius: 0.2em; }\n");
    out.push_str(".meta { color: #555; font-size: 0.85em; }\n</style>\n</head>\n<body>\n");
    let _ = writeln!(
        out,
        "<p class=\"meta\">ranking: {} | table: {} | config: {}</p>",
        map.ranking_source.as_str(),
        escape_html(&map.table_provenance),
        escape_html(&map.config_digest)
    );
    out.push_str("<div class=\"tokens\">\n");
    for e in &map.tokens {
        let alpha = (e.display_percentile / 100.0).clamp(0.0, 1.0);
        let opacity = if e.filtered { "; opacity: 0.45" } else { "" };
        let _ = writeln!(
            out,
            "<span class=\"tok\" style=\"background-color: rgba(220, 38, 38, {alpha:.3}){opacity}\" \
             title=\"angular {:.4} | magnitude {:.4} | dimensional {:.4} | composite {:.4} | percentile {:.1} | {}\">{}</span>",
            e.angular,
            e.magnitude,
            e.dimensional,
            e.composite,
            e.display_percentile,
            e.band.as_str(),
            escape_html(&e.surface)
        );
    }
    out.push_str("</div>\n</body>\n</html>\n");
    out
}
