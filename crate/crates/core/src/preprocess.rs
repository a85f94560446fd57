//! Text to token sequence.
//!
//! Text is split on Unicode whitespace; leading and trailing punctuation is
//! stripped from each fragment while inner apostrophes and hyphens survive
//! ("don't", "state-of-the-art"). Stopwords are flagged, never removed.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// The fragment as it appears in the source text, punctuation stripped.
    pub surface: String,
    /// Lookup form.
    pub normalized: String,
    /// Zero-based position in the prompt.
    pub index: usize,
    /// Byte offset of `surface` in the source text.
    pub offset: usize,
    pub is_stopword: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub mark_stopwords: bool,
    stopwords: BTreeSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig::new(true, true, true, builtin_stopwords())
    }
}

impl PreprocessConfig {
    pub fn new(
        lowercase: bool,
        strip_punctuation: bool,
        mark_stopwords: bool,
        stopwords: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut cfg = PreprocessConfig {
            lowercase,
            strip_punctuation,
            mark_stopwords,
            stopwords: BTreeSet::new(),
        };
        cfg.set_stopwords(stopwords);
        cfg
    }

    /// Replaces the stopword list; entries are normalized under this config.
    pub fn set_stopwords(&mut self, words: impl IntoIterator<Item = String>) {
        let stopwords = words
            .into_iter()
            .filter_map(|w| self.normalize(w.trim()))
            .collect();
        self.stopwords = stopwords;
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, normalized: &str) -> bool {
        self.stopwords.contains(normalized)
    }

    /// Lookup form of a single fragment, or `None` if nothing survives.
    pub fn normalize(&self, fragment: &str) -> Option<String> {
        let trimmed = if self.strip_punctuation {
            fragment.trim_matches(is_punctuation)
        } else {
            fragment
        };
        if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
            return None;
        }
        Some(if self.lowercase { trimmed.to_lowercase() } else { trimmed.to_string() })
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{00AB}' | '\u{00BB}' | '\u{2013}'
                | '\u{2014}' | '\u{2026}' | '\u{00A1}' | '\u{00BF}' | '\u{00B7}'
        )
}

pub fn tokenize(text: &str, config: &PreprocessConfig) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for (start, fragment) in split_whitespace_indices(text) {
        let surface = if config.strip_punctuation {
            let lead = fragment.len() - fragment.trim_start_matches(is_punctuation).len();
            let body = fragment.trim_matches(is_punctuation);
            (start + lead, body)
        } else {
            (start, fragment)
        };
        let (offset, surface) = surface;
        let Some(normalized) = config.normalize(surface) else {
            continue;
        };
        let is_stopword = config.mark_stopwords && config.is_stopword(&normalized);
        tokens.push(Token {
            surface: surface.to_string(),
            normalized,
            index: tokens.len(),
            offset,
            is_stopword,
        });
    }
    if tokens.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    Ok(tokens)
}

fn split_whitespace_indices(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = text.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some(&(_, c)) = rest.peek() {
            if !c.is_whitespace() {
                break;
            }
            rest.next();
        }
        let (start, _) = *rest.peek()?;
        let mut end = text.len();
        while let Some(&(i, c)) = rest.peek() {
            if c.is_whitespace() {
                end = i;
                break;
            }
            rest.next();
        }
        Some((start, &text[start..end]))
    })
}

const BUILTIN_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as",
    "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
    "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further",
    "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
    "myself", "no", "nor", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
    "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such", "than", "that",
    "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
    "yours", "yourself", "yourselves",
];

/// Built-in English function-word list: articles, auxiliaries, prepositions,
/// pronouns and conjunctions.
pub fn builtin_stopwords() -> BTreeSet<String> {
    BUILTIN_STOPWORDS.iter().map(|w| w.to_string()).collect()
}

/// Parses a stopword list: one word per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}
