//! GloVe-format embedding tables, OOV resolution and prompt aggregation.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::Token;

/// A dense vector of finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Self {
        debug_assert!(components.iter().all(|c| c.is_finite()));
        Vector(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * factor).collect())
    }

    pub(crate) fn check_dim(&self, other: &Vector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector::new(v)
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, or `None` when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Immutable vocabulary to vector map. Vectors live in one contiguous buffer.
#[derive(Clone)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
    rows: HashMap<String, usize>,
    source_id: String,
}

impl fmt::Debug for EmbeddingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingTable")
            .field("dim", &self.dim)
            .field("len", &self.rows.len())
            .field("source_id", &self.source_id)
            .finish()
    }
}

impl EmbeddingTable {
    /// Builds a table from in-memory entries. Later duplicates win.
    pub fn from_entries<I, S>(entries: I, source_id: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut builder = Builder::default();
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            if let Some(bad) = vector.iter().find(|c| !c.is_finite()) {
                return Err(Error::Parse { line: i + 1, message: format!("non-finite component {bad}") });
            }
            builder.push(word.into(), &vector, i + 1)?;
        }
        builder.finish(source_id.into())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// File path plus content hash for tables read from disk.
    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.rows.get(word).map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.rows.contains_key(word)
    }

    /// Vocabulary in ascending order.
    pub fn words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.rows.keys().map(String::as_str).collect();
        words.sort_unstable();
        words
    }
}

#[derive(Default)]
struct Builder {
    dim: Option<usize>,
    data: Vec<f64>,
    rows: HashMap<String, usize>,
}

impl Builder {
    fn push(&mut self, word: String, vector: &[f64], line: usize) -> Result<()> {
        let dim = *self.dim.get_or_insert(vector.len());
        if dim == 0 {
            return Err(Error::Parse { line, message: "entry has no vector components".into() });
        }
        if vector.len() != dim {
            return Err(Error::Parse {
                line,
                message: format!("expected {dim} components, found {}", vector.len()),
            });
        }
        if let Some(&row) = self.rows.get(&word) {
            log::warn!("line {line}: duplicate entry {word:?}, keeping the later vector");
            self.data[row * dim..(row + 1) * dim].copy_from_slice(vector);
        } else {
            self.rows.insert(word, self.rows.len());
            self.data.extend_from_slice(vector);
        }
        Ok(())
    }

    fn finish(self, source_id: String) -> Result<EmbeddingTable> {
        let dim = self.dim.ok_or(Error::EmptyEmbeddings)?;
        Ok(EmbeddingTable { dim, data: self.data, rows: self.rows, source_id })
    }
}

/// Parses GloVe text: `word v1 v2 ... vd` per line. A leading word2vec-style
/// `count dim` header line is skipped.
pub fn parse_glove(text: &str, source_id: impl Into<String>) -> Result<EmbeddingTable> {
    let mut builder = Builder::default();
    let mut components = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let Some(word) = fields.next() else { continue };
        if builder.dim.is_none() && is_header(line) {
            continue;
        }
        components.clear();
        for field in fields {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse { line: lineno, message: format!("non-finite component {field:?}") });
            }
            components.push(value);
        }
        builder.push(word.to_string(), &components, lineno)?;
    }
    builder.finish(source_id.into())
}

fn is_header(line: &str) -> bool {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

pub fn load_glove(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Parse { line: 0, message: format!("invalid UTF-8: {e}") })?;
    let hash = hex::encode(Sha256::digest(&bytes));
    parse_glove(text, format!("{}#sha256:{}", path.display(), hash))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    /// Keep the token with an all-zeros vector.
    #[default]
    ZeroVector,
    /// Drop the token.
    Skip,
    /// Refuse the prompt.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    InVocab,
    OovZero,
    OovSkipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedToken {
    pub token: Token,
    pub vector: Vector,
    pub provenance: Provenance,
}

/// Maps tokens to vectors. Skipped tokens are not returned.
pub fn resolve(table: &EmbeddingTable, tokens: &[Token], policy: OovPolicy) -> Result<Vec<ResolvedToken>> {
    if tokens.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let mut resolved = Vec::with_capacity(tokens.len());
    let mut missing = Vec::new();
    for token in tokens {
        if let Some(v) = table.get(&token.normalized) {
            resolved.push(ResolvedToken {
                token: token.clone(),
                vector: Vector(v.to_vec()),
                provenance: Provenance::InVocab,
            });
            continue;
        }
        match policy {
            OovPolicy::ZeroVector => {
                log::info!("out-of-vocabulary token {:?} mapped to the zero vector", token.surface);
                resolved.push(ResolvedToken {
                    token: token.clone(),
                    vector: Vector::zeros(table.dim()),
                    provenance: Provenance::OovZero,
                });
            }
            OovPolicy::Skip => log::info!("out-of-vocabulary token {:?} skipped", token.surface),
            OovPolicy::Error => {
                log::info!("out-of-vocabulary token {:?}", token.surface);
                missing.push(token.surface.clone());
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::OutOfVocabulary(missing));
    }
    if resolved.is_empty() {
        return Err(Error::EmptyAfterOov);
    }
    Ok(resolved)
}

/// Componentwise sum in token order.
pub fn aggregate(resolved: &[ResolvedToken]) -> Result<Vector> {
    let first = resolved.first().ok_or(Error::EmptyPrompt)?;
    let mut sum = vec![0.0; first.vector.dim()];
    for r in resolved {
        r.vector.check_dim(&first.vector)?;
        for (s, c) in sum.iter_mut().zip(r.vector.as_slice()) {
            *s += c;
        }
    }
    Ok(Vector(sum))
}
