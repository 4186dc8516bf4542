//! Diminishing-returns sampling check for the representability improvement.
//!
//! With nonnegative pairwise similarities the improvement
//! `||target||^2 - ||target - aggregate(S)||^2` is submodular: the marginal
//! gain of a token can only shrink as the selected set grows. This module
//! samples random nested set pairs and verifies the inequality numerically.

use alloc::collections::BTreeSet;

use super::{OptError, ProblemInstance};
use crate::rng::CounterRng;
use crate::vecmath;

/// Outcome of a sampling run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubmodularityReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest observed `gain(T) - gain(S)` over nested pairs S within T;
    /// positive values beyond the tolerance are violations.
    pub max_gap: f64,
    pub tolerance: f64,
}

impl SubmodularityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Marginal gain of adding `j` to `set`:
/// `2 target'u_j - 2 aggregate(set)'u_j - ||u_j||^2`.
fn marginal_gain(inst: &ProblemInstance, set: &BTreeSet<usize>, j: usize) -> f64 {
    let u = &inst.embeddings[j];
    let mut aggregate_dot = 0.0;
    for &i in set {
        aggregate_dot += vecmath::dot(&inst.embeddings[i], u);
    }
    2.0 * vecmath::dot(&inst.target, u) - 2.0 * aggregate_dot - vecmath::norm_sq(u)
}

/// Samples `trials` random nested pairs `S` within `T` and an outside token
/// `j`, asserting the diminishing-returns inequality
/// `gain(S) >= gain(T) - 1e-9` for each.
///
/// Requires nonnegative pairwise embedding inner products; violating
/// instances are rejected up front.
pub fn diminishing_returns_check(
    inst: &ProblemInstance,
    trials: usize,
    seed: u64,
) -> Result<SubmodularityReport, OptError> {
    inst.validate()?;
    let n = inst.n();
    for i in 0..n {
        for j in (i + 1)..n {
            if vecmath::dot(&inst.embeddings[i], &inst.embeddings[j]) < 0.0 {
                return Err(OptError::Precondition(alloc::format!(
                    "embeddings {i} and {j} have negative inner product"
                )));
            }
        }
    }

    let tolerance = 1e-9;
    let rng = CounterRng::new(seed);
    let mut violations = 0;
    let mut max_gap = f64::NEG_INFINITY;

    for trial in 0..trials {
        let stream = trial as u64;
        let j = rng.below(stream, 0, n as u64) as usize;
        let mut grown: BTreeSet<usize> = BTreeSet::new();
        let mut nested: BTreeSet<usize> = BTreeSet::new();
        for (slot, i) in (0..n).filter(|&i| i != j).enumerate() {
            let bits = rng.bits(stream, 1 + slot as u64);
            if bits & 1 == 1 {
                grown.insert(i);
                if bits & 2 == 2 {
                    nested.insert(i);
                }
            }
        }
        let gap = marginal_gain(inst, &grown, j) - marginal_gain(inst, &nested, j);
        max_gap = max_gap.max(gap);
        if gap > tolerance {
            violations += 1;
        }
    }

    Ok(SubmodularityReport {
        trials,
        violations,
        max_gap: if max_gap == f64::NEG_INFINITY { 0.0 } else { max_gap },
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::CostParams;
    use crate::optimizer::ConstraintParams;
    use alloc::vec;
    use alloc::vec::Vec;

    fn instance_with(embeddings: Vec<Vec<f64>>) -> ProblemInstance {
        let n = embeddings.len();
        let dim = embeddings[0].len();
        ProblemInstance {
            embeddings,
            target: vec![1.0; dim],
            costs: vec![0.0; n],
            attention: vec![1.0; n],
            recon_error: vec![0.0; n],
            snr: vec![1.0; n],
            kl: vec![0.0; n],
            pair_similarity: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            bounds: vec![true; n],
            constraints: ConstraintParams::default(),
            weights: CostParams::default(),
        }
    }

    #[test]
    fn orthogonal_embeddings_have_constant_gains() {
        let inst = instance_with(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let report = diminishing_returns_check(&inst, 200, 7).unwrap();
        assert!(report.passed());
        // cross terms vanish, so the gap is exactly zero
        assert!(report.max_gap.abs() < 1e-15, "gap {}", report.max_gap);
    }

    #[test]
    fn all_ones_embeddings_shrink_gains_by_2d() {
        let dim = 4;
        let inst = instance_with(vec![vec![1.0; dim]; 3]);
        let single: BTreeSet<usize> = [1].into_iter().collect();
        let empty = BTreeSet::new();
        let shrink = marginal_gain(&inst, &empty, 0) - marginal_gain(&inst, &single, 0);
        assert!((shrink - 2.0 * dim as f64).abs() < 1e-12);
    }

    #[test]
    fn negative_correlations_are_rejected() {
        let inst = instance_with(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert!(matches!(
            diminishing_returns_check(&inst, 10, 0),
            Err(OptError::Precondition(_))
        ));
    }

    #[test]
    fn random_nonnegative_embeddings_pass() {
        let rng = CounterRng::new(11);
        let embeddings: Vec<Vec<f64>> = (0..8)
            .map(|i| (0..5).map(|d| rng.uniform(i, d as u64)).collect())
            .collect();
        let inst = instance_with(embeddings);
        let report = diminishing_returns_check(&inst, 500, 3).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
