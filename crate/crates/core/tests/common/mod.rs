#![allow(dead_code)]

use embedscope::EmbeddingTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vocabulary(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("w{i:03}")).collect()
}

/// Uniform(-1, 1) vectors for `w000 .. w{size-1}`.
pub fn synthetic_table(size: usize, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingTable::from_entries(
        vocabulary(size)
            .into_iter()
            .map(|w| (w, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>())),
        format!("synthetic-{size}x{dim}-{seed}"),
    )
    .unwrap()
}

pub fn random_prompt(rng: &mut impl Rng, vocab: &[String], len: usize) -> String {
    (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect::<Vec<_>>().join(" ")
}
