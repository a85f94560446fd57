//! Token attribution over static word embeddings.
//!
//! Each token of a prompt is scored by removing it from the prompt's summed
//! embedding and measuring how the aggregate moves: the change in direction
//! ([`scoring::angular_score`]), the change in length
//! ([`scoring::magnitude_score`]), and a sign-aware per-dimension contribution
//! ([`scoring::dimensional_score`]). The three are multiplied into a composite
//! score. An additive spline model ([`gam`]) can learn a mapping from those
//! features to within-prompt importance percentiles, [`relevance`] turns an
//! analysis into ranked maps and renders them, and [`gap`] compares a summary
//! against its source.

pub mod digest;
pub mod embeddings;
pub mod error;
pub mod gam;
pub mod parallel;
pub mod preprocess;
pub mod relevance;
pub mod scoring;
pub mod gap;

pub use embeddings::{aggregate, load_glove, resolve, EmbeddingTable, OovPolicy, Provenance, ResolvedToken, Vector};
pub use error::{Error, ErrorKind, Result};
pub use gam::{fit_gam, FeatureRow, GamModel, GamOptions};
pub use gap::{gap_report, GapConfig, GapReport};
pub use parallel::Execution;
pub use preprocess::{builtin_stopwords, tokenize, PreprocessConfig, Token};
pub use relevance::{build_map, Band, RelevanceMap};
pub use scoring::{analyze_prompt, AnalysisConfig, PromptAnalysis, ScoreBreakdown, ScoringConfig};
