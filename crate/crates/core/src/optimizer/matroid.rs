//! Partition matroids and feasible augmentation under a matroid
//! intersection, used to reason about the diversity and KG-consistency
//! independence structures of the selection problem.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::OptError;

/// An independence oracle over ground-set indices.
pub trait IndependenceOracle {
    fn is_independent(&self, set: &BTreeSet<usize>) -> bool;
}

/// Partition matroid: the ground set is split into groups, each with a
/// selection cap.
#[derive(Debug, Clone)]
pub struct PartitionMatroid {
    group_of: Vec<usize>,
    caps: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(group_of: Vec<usize>, caps: Vec<usize>) -> Self {
        debug_assert!(group_of.iter().all(|&g| g < caps.len()));
        Self { group_of, caps }
    }

    /// Free matroid: every subset independent.
    pub fn free(n: usize) -> Self {
        Self { group_of: vec![0; n], caps: vec![n] }
    }

    /// Diversity structure: tokens are grouped by the connected components
    /// of the "too similar" graph and at most one token per component may be
    /// selected.
    pub fn from_diversity(pair_similarity: &[Vec<f64>], max_pair_similarity: f64) -> Self {
        let n = pair_similarity.len();
        let mut group_of = vec![usize::MAX; n];
        let mut groups = 0;
        for start in 0..n {
            if group_of[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            group_of[start] = groups;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if j != i
                        && group_of[j] == usize::MAX
                        && pair_similarity[i][j] > max_pair_similarity
                    {
                        group_of[j] = groups;
                        stack.push(j);
                    }
                }
            }
            groups += 1;
        }
        Self { group_of, caps: vec![1; groups] }
    }

    /// KG-consistency structure: tokens above the divergence bound form a
    /// group with cap zero, the rest are unconstrained.
    pub fn from_kg_consistency(kl: &[f64], max_kl: f64) -> Self {
        let n = kl.len();
        let group_of = kl.iter().map(|&v| usize::from(v > max_kl)).collect();
        Self { group_of, caps: vec![n, 0] }
    }
}

impl IndependenceOracle for PartitionMatroid {
    fn is_independent(&self, set: &BTreeSet<usize>) -> bool {
        let mut used = vec![0usize; self.caps.len()];
        for &i in set {
            let g = self.group_of[i];
            used[g] += 1;
            if used[g] > self.caps[g] {
                return false;
            }
        }
        true
    }
}

/// Result of a feasible augmentation attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Augmentation {
    /// Element of `B \ A` whose addition to `A` stays independent in both
    /// matroids.
    Augment(usize),
    /// Element of `A \ B` whose addition to `B` stays independent in both
    /// matroids.
    Exchange(usize),
}

/// Searches for a feasible augmentation of `a` from the larger set `b`.
///
/// Requires `a` independent in both oracles, `b` independent in the first,
/// and `|b| > |a|`. Scans `b \ a` in ascending index order for an element
/// keeping `a` independent in both structures; failing that, scans `a \ b`
/// for an exchange into `b`. Returns an error when neither move exists,
/// which can happen for structures that are not genuine matroid pairs.
pub fn matroid_augment(
    a: &BTreeSet<usize>,
    b: &BTreeSet<usize>,
    first: &dyn IndependenceOracle,
    second: &dyn IndependenceOracle,
) -> Result<Augmentation, OptError> {
    if !first.is_independent(a) || !second.is_independent(a) {
        return Err(OptError::Precondition("A must be independent in both matroids".into()));
    }
    if !first.is_independent(b) {
        return Err(OptError::Precondition("B must be independent in the first matroid".into()));
    }
    if b.len() <= a.len() {
        return Err(OptError::Precondition("B must be strictly larger than A".into()));
    }

    for &candidate in b.difference(a) {
        let mut grown = a.clone();
        grown.insert(candidate);
        if first.is_independent(&grown) && second.is_independent(&grown) {
            return Ok(Augmentation::Augment(candidate));
        }
    }
    for &candidate in a.difference(b) {
        let mut grown = b.clone();
        grown.insert(candidate);
        if first.is_independent(&grown) && second.is_independent(&grown) {
            return Ok(Augmentation::Exchange(candidate));
        }
    }
    Err(OptError::NoAugmentation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn free_matroids_return_lowest_index() {
        let m1 = PartitionMatroid::free(5);
        let m2 = PartitionMatroid::free(5);
        let result = matroid_augment(&set(&[0]), &set(&[2, 3, 4]), &m1, &m2).unwrap();
        assert_eq!(result, Augmentation::Augment(2));
    }

    #[test]
    fn one_free_slot_returns_the_unique_candidate() {
        // groups: {0,1} cap 1, {2,3} cap 1; A = {0} uses the first group,
        // so only 2 or 3 can extend it; B = {1, 3} offers exactly 3
        let m1 = PartitionMatroid::new(vec![0, 0, 1, 1], vec![1, 1]);
        let m2 = PartitionMatroid::free(4);
        let result = matroid_augment(&set(&[0]), &set(&[1, 3]), &m1, &m2).unwrap();
        assert_eq!(result, Augmentation::Augment(3));
    }

    #[test]
    fn equal_sizes_are_rejected() {
        let m = PartitionMatroid::free(3);
        assert!(matches!(
            matroid_augment(&set(&[0]), &set(&[1]), &m, &m),
            Err(OptError::Precondition(_))
        ));
    }

    #[test]
    fn dead_end_is_an_explicit_error() {
        // the only candidate sits in a cap-zero group of the second
        // structure and no exchange is available
        let m1 = PartitionMatroid::free(3);
        let m2 = PartitionMatroid::new(vec![0, 0, 1], vec![1, 0]);
        assert!(matches!(
            matroid_augment(&set(&[0]), &set(&[0, 2]), &m1, &m2),
            Err(OptError::NoAugmentation)
        ));
    }

    /// Oracle that rejects an explicit list of sets; lets tests reach the
    /// exchange branch, which genuine partition pairs rarely trigger.
    struct Blocklist(Vec<BTreeSet<usize>>);

    impl IndependenceOracle for Blocklist {
        fn is_independent(&self, set: &BTreeSet<usize>) -> bool {
            !self.0.contains(set)
        }
    }

    #[test]
    fn exchange_fires_when_every_augment_is_blocked() {
        let m1 = PartitionMatroid::free(3);
        let m2 = Blocklist(vec![set(&[0, 1]), set(&[0, 2])]);
        let result = matroid_augment(&set(&[0]), &set(&[1, 2]), &m1, &m2).unwrap();
        assert_eq!(result, Augmentation::Exchange(0));
    }

    #[test]
    fn diversity_matroid_caps_similar_tokens() {
        let sim = alloc::vec![
            alloc::vec![1.0, 0.95, 0.1],
            alloc::vec![0.95, 1.0, 0.1],
            alloc::vec![0.1, 0.1, 1.0],
        ];
        let m = PartitionMatroid::from_diversity(&sim, 0.9);
        assert!(m.is_independent(&set(&[0, 2])));
        assert!(!m.is_independent(&set(&[0, 1])));
    }

    #[test]
    fn kg_matroid_bans_divergent_tokens() {
        let m = PartitionMatroid::from_kg_consistency(&[0.0, 2.0, 0.1], 1.0);
        assert!(m.is_independent(&set(&[0, 2])));
        assert!(!m.is_independent(&set(&[1])));
    }
}
