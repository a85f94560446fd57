#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORKED_PROMPT: &str = "The AI system processes natural language effectively";

pub const WORDS: &[&str] = &[
    "the", "a", "an", "of", "in", "to", "is", "are", "was", "ai", "system", "processes", "natural", "language",
    "effectively", "machine", "learning", "model", "data", "text", "summary", "quickly", "large", "small", "network",
    "training", "computer", "vision", "speech", "robot", "fast", "slow", "analysis", "token", "embedding", "vector",
    "artificial", "intelligence", "cat", "dog", "house", "river", "mountain", "music", "color", "light",
];

/// Writes a seeded 50-dimensional table in GloVe text format.
pub fn write_glove(dir: &Path) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut text = String::new();
    for w in WORDS {
        text.push_str(w);
        for _ in 0..50 {
            text.push_str(&format!(" {:.6}", rng.gen_range(-1.0..1.0)));
        }
        text.push('\n');
    }
    let path = dir.join("vectors.50d.txt");
    std::fs::write(&path, text).unwrap();
    path
}

/// `n` prompts of 4 to 12 words drawn from the fixture vocabulary.
pub fn write_corpus(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..n {
        let len = rng.gen_range(4..=12);
        let prompt: Vec<&str> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
        text.push_str(&prompt.join(" "));
        text.push('\n');
    }
    let path = dir.join("corpus.txt");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn cli() -> assert_cmd::Command {
    let mut cmd = assert_cmd::Command::cargo_bin("embedscope").unwrap();
    cmd.env_remove("EMBEDSCOPE_EMBEDDINGS").env_remove("RUST_LOG");
    cmd
}
