//! Seed handling shared by every stochastic routine.
//!
//! All randomness flows from explicit `u64` seeds. Sub-streams are derived
//! with a SplitMix64 mix so that independent consumers (fold assignment,
//! data sampling, nested model selection) never share a stream.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of a named sub-stream.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream))
}

/// Seeded random partition of `0..n` into `folds` groups whose sizes differ
/// by at most one. Returns the fold label of each index.
pub fn fold_labels(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut labels = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = pos % folds;
    }
    labels
}

/// Fold labels stratified by a binary group: each group is shuffled and dealt
/// round-robin, continuing the deal across groups so total fold sizes stay
/// balanced as well.
pub fn stratified_fold_labels(groups: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed);
    let mut labels = vec![0; groups.len()];
    let mut next = 0usize;
    for g in 0..=1u8 {
        let mut members: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == g).collect();
        members.shuffle(&mut rng);
        for i in members {
            labels[i] = next % folds;
            next += 1;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced() {
        let labels = fold_labels(23, 5, 7);
        let mut counts = [0usize; 5];
        for l in labels {
            counts[l] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
    }

    #[test]
    fn stratified_folds_balance_each_group() {
        let groups: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let labels = stratified_fold_labels(&groups, 4, 11);
        for g in 0..=1u8 {
            let mut counts = [0usize; 4];
            for (i, &l) in labels.iter().enumerate() {
                if groups[i] == g {
                    counts[l] += 1;
                }
            }
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "group {g}: {counts:?}");
        }
    }

    #[test]
    fn derived_streams_differ() {
        assert_ne!(derive(1, 0), derive(1, 1));
        assert_ne!(derive(1, 0), derive(2, 0));
        assert_eq!(derive(5, 9), derive(5, 9));
    }
}
