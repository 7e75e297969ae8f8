//! Seeded synthetic corpora for smoke runs and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Pair};

const CJK_BASE: u32 = 0x4E00;
const CJK_SPAN: u32 = 3000;

fn clause_text(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(3..=10);
    (0..len)
        .map(|_| char::from_u32(CJK_BASE + rng.random_range(0..CJK_SPAN)).expect("CJK block"))
        .collect()
}

/// Random document with `n_clauses` distinct clauses and the given pairs.
pub fn document(doc_id: &str, n_clauses: usize, pairs: &[Pair], rng: &mut ChaCha8Rng) -> Document {
    let mut clauses: Vec<String> = Vec::with_capacity(n_clauses);
    while clauses.len() < n_clauses {
        let c = clause_text(rng);
        if !clauses.contains(&c) {
            clauses.push(c);
        }
    }
    Document::new(doc_id, &clauses, pairs.iter().copied()).expect("synthetic document is well formed")
}

/// `n` documents of 3 to 12 clauses, each with exactly one gold pair.
pub fn single_pair_corpus(n: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len: usize = rng.random_range(3..=12);
            let e: usize = rng.random_range(1..=len);
            let c = (e + rng.random_range(0..3usize)).saturating_sub(1).clamp(1, len);
            document(&format!("syn{i:05}"), len, &[(e, c)], &mut rng)
        })
        .collect()
}
