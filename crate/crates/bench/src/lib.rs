//! Shared inputs for the benchmarks.

use codestyle_core::contrastive::synthetic::generate_corpus;
use codestyle_core::contrastive::{build_pairs, ContrastivePair, PairConfig};

/// `n` generated sources, cycling through the three style archetypes.
pub fn sources(n: usize) -> Vec<String> {
    generate_corpus(n, 7).into_iter().map(|f| f.source).collect()
}

pub fn pairs(files: usize) -> Vec<ContrastivePair> {
    let corpus = generate_corpus(files, 7);
    let refs: Vec<(&str, &str)> = corpus.iter().map(|f| (f.file_id.as_str(), f.source.as_str())).collect();
    build_pairs(&refs, &PairConfig::default()).pairs
}
