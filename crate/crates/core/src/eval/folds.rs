//! Participant-grouped fold assignment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which fold each participant is held out in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: BTreeMap<u32, usize>,
}

impl FoldAssignment {
    /// Participants of fold `f` in ascending id order.
    pub fn members(&self, fold: usize) -> Vec<u32> {
        self.fold_of.iter().filter(|(_, &f)| f == fold).map(|(&p, _)| p).collect()
    }

    pub fn fold(&self, participant: u32) -> Option<usize> {
        self.fold_of.get(&participant).copied()
    }
}

/// Shuffles the distinct participants by `seed` and deals them round-robin into `k` folds.
pub fn group_kfold(participants: &[u32], k: usize, seed: u64) -> Result<FoldAssignment> {
    let mut ids = participants.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if k < 2 {
        return Err(invalid(format!("k must be at least 2, got {k}")));
    }
    if k > ids.len() {
        return Err(invalid(format!("k = {k} exceeds the {} distinct participants", ids.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let fold_of = ids.iter().enumerate().map(|(i, &p)| (p, i % k)).collect();
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_split() {
        let ids: Vec<u32> = (1..=10).collect();
        let f = group_kfold(&ids, 5, 3).unwrap();
        for fold in 0..5 {
            assert_eq!(f.members(fold).len(), 2);
        }
    }

    #[test]
    fn leave_one_out() {
        let ids: Vec<u32> = (1..=6).collect();
        let f = group_kfold(&ids, 6, 0).unwrap();
        for fold in 0..6 {
            assert_eq!(f.members(fold).len(), 1);
        }
    }

    #[test]
    fn disjoint_and_covering() {
        let ids: Vec<u32> = (1..=23).chain(1..=5).collect();
        for seed in 0..20 {
            let f = group_kfold(&ids, 5, seed).unwrap();
            let mut seen: Vec<u32> = (0..5).flat_map(|k| f.members(k)).collect();
            seen.sort_unstable();
            assert_eq!(seen, (1..=23).collect::<Vec<_>>());
            let sizes: Vec<usize> = (0..5).map(|k| f.members(k).len()).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn too_many_folds() {
        assert!(group_kfold(&[1, 2, 3], 4, 0).is_err());
        assert!(group_kfold(&[1, 1, 1, 2], 3, 0).is_err());
    }
}
