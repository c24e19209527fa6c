use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

/// Shuffle, then fill batches greedily so no batch holds two pairs from
/// the same file. Each index appears at most once; batches that end up
/// with fewer than two pairs are dropped.
pub fn stratified_batches<R: Rng>(file_ids: &[&str], batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..file_ids.len()).collect();
    remaining.shuffle(rng);
    let mut batches = Vec::new();
    while !remaining.is_empty() {
        let mut used = HashSet::new();
        let mut batch = Vec::with_capacity(batch_size);
        let mut rest = Vec::with_capacity(remaining.len());
        for i in remaining {
            if batch.len() < batch_size && used.insert(file_ids[i]) {
                batch.push(i);
            } else {
                rest.push(i);
            }
        }
        remaining = rest;
        if batch.len() >= 2 {
            batches.push(batch);
        } else {
            // a lone leftover can never form a valid batch
            break;
        }
    }
    batches
}
