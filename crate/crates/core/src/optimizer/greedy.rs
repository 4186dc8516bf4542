//! Marginal-gain greedy selection under the full constraint set.
//!
//! Candidates are pre-filtered by the per-token thresholds (attention,
//! reconstruction error, SNR, KG divergence) and the grounding bounds. Each
//! round adds the feasible candidate with the largest net gain
//! `ir_weight * (residual reduction) - cost_weight * cost`, skipping
//! candidates too similar to an already selected token, and stops at the
//! budget, on an empty candidate pool, or when no candidate improves the
//! objective.

use alloc::vec::Vec;

use super::{OptError, ProblemInstance, SelectionVector, SolveReport};
use crate::vecmath;

pub fn greedy_select(inst: &ProblemInstance) -> Result<SolveReport, OptError> {
    inst.validate()?;
    let n = inst.n();
    let c = &inst.constraints;

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            inst.bounds[i]
                && inst.attention[i] >= c.min_attention
                && inst.recon_error[i] <= c.max_recon_error
                && inst.snr[i] >= c.min_snr
                && inst.kl[i] <= c.max_kl
        })
        .collect();

    let mut selected: Vec<usize> = Vec::new();
    let mut residual = inst.target.clone();
    let mut rounds = 0usize;

    while selected.len() < c.max_tokens && !candidates.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for &i in &candidates {
            let diverse = selected
                .iter()
                .all(|&j| inst.pair_similarity[i][j] <= c.max_pair_similarity);
            if !diverse {
                continue;
            }
            // residual reduction of adding token i:
            // ||r||^2 - ||r - u_i||^2 = 2 r'u_i - ||u_i||^2
            let u = &inst.embeddings[i];
            let reduction = 2.0 * vecmath::dot(&residual, u) - vecmath::norm_sq(u);
            let gain = inst.weights.ir_weight * reduction
                - inst.weights.cost_weight * inst.costs[i];
            let better = match best {
                None => true,
                Some((_, incumbent)) => gain > incumbent,
            };
            if better {
                best = Some((i, gain));
            }
        }

        // no feasible candidate, or the best addition would worsen the
        // objective: stop even with budget remaining
        let Some((winner, gain)) = best else { break };
        if gain <= 0.0 {
            break;
        }

        vecmath::axpy(-1.0, &inst.embeddings[winner].clone(), &mut residual);
        selected.push(winner);
        candidates.retain(|&i| i != winner);
        rounds += 1;
    }

    let mut report = SolveReport::for_selection(inst, SelectionVector::from_indices(n, &selected));
    report.iterations = rounds;
    Ok(report)
}
