//! Seeded random problem-instance generators for property tests and the
//! verification suite. Deterministic: every instance is a pure function of
//! its seed.

use alloc::vec;
use alloc::vec::Vec;


#[allow(unused_imports)] // no_std float math; test builds link std and shadow the trait
use num_traits::Float;

use crate::losses::CostParams;
use crate::optimizer::{ConstraintParams, ProblemInstance};
use crate::rng::CounterRng;
use crate::vecmath;

fn cosine_matrix(embeddings: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = embeddings.len();
    let norms: Vec<f64> = embeddings.iter().map(|u| vecmath::norm_sq(u).sqrt()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        vecmath::dot(&embeddings[i], &embeddings[j]) / (norms[i] * norms[j])
                    }
                })
                .collect()
        })
        .collect()
}

// stream ids within a seed
const S_SHAPE: u64 = 0;
const S_EMB: u64 = 1;
const S_ATT: u64 = 2;
const S_COST: u64 = 3;
const S_RECON: u64 = 4;
const S_SNR: u64 = 5;
const S_KL: u64 = 6;
const S_TARGET: u64 = 7;

/// A small instance with mixed constraint activity: attention bounds
/// exclude some tokens, reconstruction and SNR thresholds bind on others,
/// budgets are tight, and similar pairs occur.
///
/// Two deliberate properties keep the instance class meaningful for
/// oracle-equivalence checks:
///
/// * the target is a planted feasible subset's embedding sum plus noise, so
///   a near-optimal *binary* selection exists and rounding a good relaxed
///   solution can reach it (targets built from fractional mixes have an
///   unbounded integrality gap that no rounding can close);
/// * per-token KG divergences stay within their bound, because they are
///   constants of the instance: a token above the bound would make the
///   relaxed problem infeasible outright and the dual unbounded.
pub fn mixed_instance(seed: u64) -> ProblemInstance {
    let rng = CounterRng::new(seed ^ 0xa11c_0de5);
    let n = 3 + (rng.below(S_SHAPE, 0, 10)) as usize; // 3..=12
    let dim = n + 2 + rng.below(S_SHAPE, 1, 3) as usize;

    let embeddings: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let (z, _) = rng.normal_pair(S_EMB, (i * dim + d) as u64);
                    z / (dim as f64).sqrt()
                })
                .collect()
        })
        .collect();
    let pair_similarity = cosine_matrix(&embeddings);

    let attention: Vec<f64> = (0..n).map(|i| rng.uniform(S_ATT, i as u64)).collect();
    let min_attention = 0.15;
    let bounds: Vec<bool> = attention.iter().map(|&a| a >= min_attention).collect();

    let costs: Vec<f64> = (0..n).map(|i| 0.25 * rng.uniform(S_COST, i as u64)).collect();
    // thresholds sit at 1.0; keep the data clear of them on both sides so
    // the associated dual variables have well-scaled targets
    let recon_error: Vec<f64> = (0..n)
        .map(|i| {
            let u = rng.uniform(S_RECON, i as u64);
            if u < 0.25 {
                1.3 + u // violator, margin >= 0.3
            } else {
                0.9 * (u - 0.25) // clean, margin >= 0.1
            }
        })
        .collect();
    let snr: Vec<f64> = (0..n)
        .map(|i| {
            let u = rng.uniform(S_SNR, i as u64);
            if u < 0.3 {
                0.2 + 0.5 * u // unreliable, deficit >= 0.65
            } else {
                2.0 + 28.0 * (u - 0.3) // reliable, surplus >= 1.0
            }
        })
        .collect();
    let kl: Vec<f64> = (0..n).map(|i| 0.8 * rng.uniform(S_KL, i as u64)).collect();

    let max_pair_similarity = 0.95;
    let max_tokens = 1 + rng.below(S_SHAPE, 2, n as u64) as usize;

    // plant a feasible subset and aim the target at its embedding sum
    let mut planted: Vec<usize> = Vec::new();
    for i in 0..n {
        if planted.len() >= max_tokens {
            break;
        }
        let candidate_ok = bounds[i]
            && recon_error[i] <= 1.0
            && snr[i] >= 1.0
            && planted.iter().all(|&j| pair_similarity[i][j] <= max_pair_similarity)
            && rng.bits(S_TARGET, 100 + i as u64) & 1 == 1;
        if candidate_ok {
            planted.push(i);
        }
    }
    let mut plant_weights = vec![0.0; n];
    for &i in &planted {
        plant_weights[i] = 1.0;
    }
    let mut target = vecmath::weighted_sum(&embeddings, &plant_weights);
    for (d, t) in target.iter_mut().enumerate() {
        let (z, _) = rng.normal_pair(S_TARGET, d as u64);
        *t += 0.15 * z / (dim as f64).sqrt();
    }

    ProblemInstance {
        pair_similarity,
        embeddings,
        target,
        costs,
        attention,
        recon_error,
        snr,
        kl,
        bounds,
        constraints: ConstraintParams {
            max_tokens,
            min_attention,
            max_recon_error: 1.0,
            max_kl: 1.0,
            max_pair_similarity,
            min_snr: 1.0,
            pair_slack: None,
        },
        weights: CostParams {
            ir_weight: 1.0,
            cost_weight: 0.05 + 0.25 * rng.uniform(S_SHAPE, 3),
            kappa: 1.0,
        },
    }
}

/// Monotone-submodular cardinality instance: nonnegative embeddings (hence
/// nonnegative pairwise similarities), the target equal to the full column
/// sum, zero costs, and only the bandwidth budget active.
pub fn submodular_instance(seed: u64) -> ProblemInstance {
    let rng = CounterRng::new(seed ^ 0x5ab0_d012_3456_789a);
    let n = 4 + rng.below(S_SHAPE, 0, 12) as usize; // 4..=15
    let dim = 4 + rng.below(S_SHAPE, 1, 5) as usize;

    let embeddings: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let (z, _) = rng.normal_pair(S_EMB, (i * dim + d) as u64);
                    z.abs() / (dim as f64).sqrt()
                })
                .collect()
        })
        .collect();
    let target = vecmath::weighted_sum(&embeddings, &vec![1.0; n]);

    ProblemInstance {
        pair_similarity: cosine_matrix(&embeddings),
        embeddings,
        target,
        costs: vec![0.0; n],
        attention: vec![1.0; n],
        recon_error: vec![0.0; n],
        snr: vec![10.0; n],
        kl: vec![0.0; n],
        bounds: vec![true; n],
        constraints: ConstraintParams {
            max_tokens: 1 + rng.below(S_SHAPE, 2, n as u64) as usize,
            min_attention: 0.0,
            max_recon_error: 1.0,
            max_kl: 1.0,
            max_pair_similarity: 1.0,
            min_snr: 1.0,
            pair_slack: None,
        },
        weights: CostParams { ir_weight: 1.0, cost_weight: 0.0, kappa: 1.0 },
    }
}

/// Strictly convex instance whose box-constrained optimum is interior: the
/// embedding matrix has full column rank (dim > n) and the target is an
/// interior combination of the columns. Every explicit constraint is slack.
pub fn interior_instance(seed: u64) -> ProblemInstance {
    let rng = CounterRng::new(seed ^ 0x1f2e_3d4c);
    let n = 2 + rng.below(S_SHAPE, 0, 11) as usize; // 2..=12
    let dim = n + 2;

    let embeddings: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let (z, _) = rng.normal_pair(S_EMB, (i * dim + d) as u64);
                    z
                })
                .collect()
        })
        .collect();
    let interior: Vec<f64> =
        (0..n).map(|i| 0.2 + 0.6 * rng.uniform(S_TARGET, i as u64)).collect();
    let target = vecmath::weighted_sum(&embeddings, &interior);

    ProblemInstance {
        pair_similarity: cosine_matrix(&embeddings),
        embeddings,
        target,
        costs: vec![0.0; n],
        attention: vec![1.0; n],
        recon_error: (0..n).map(|i| 0.2 * rng.uniform(S_RECON, i as u64)).collect(),
        snr: vec![10.0; n],
        kl: (0..n).map(|i| 0.3 * rng.uniform(S_KL, i as u64)).collect(),
        bounds: vec![true; n],
        constraints: ConstraintParams {
            max_tokens: n,
            min_attention: 0.0,
            max_recon_error: 1.0,
            max_kl: 1.0,
            max_pair_similarity: 1.0,
            min_snr: 1.0,
            pair_slack: None,
        },
        weights: CostParams { ir_weight: 1.0, cost_weight: 0.0, kappa: 1.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_produce_valid_instances() {
        for seed in 0..25 {
            mixed_instance(seed).validate().unwrap();
            submodular_instance(seed).validate().unwrap();
            interior_instance(seed).validate().unwrap();
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(mixed_instance(7), mixed_instance(7));
        assert_eq!(submodular_instance(7), submodular_instance(7));
        assert_eq!(interior_instance(7), interior_instance(7));
    }

    #[test]
    fn submodular_instances_have_nonnegative_dots() {
        for seed in 0..25 {
            let inst = submodular_instance(seed);
            for i in 0..inst.n() {
                for j in (i + 1)..inst.n() {
                    assert!(vecmath::dot(&inst.embeddings[i], &inst.embeddings[j]) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn mixed_instances_keep_kg_divergence_feasible() {
        for seed in 0..50 {
            let inst = mixed_instance(seed);
            assert!(inst.kl.iter().all(|&v| v <= inst.constraints.max_kl));
        }
    }
}
