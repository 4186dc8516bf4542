//! Rounding a relaxed selection to a feasible binary one: keep the top
//! values within the budget, then repair the per-token and pairwise
//! constraints by dropping offenders.

use alloc::vec::Vec;

use super::{check_feasible, ProblemInstance, RelaxedSelection, SelectionVector, CONSTRAINT_TOLERANCE};

/// Rounding threshold: a token is promoted to selected only when the
/// relaxation commits at least half of it. Rounding bare positivity up
/// promotes numerical dust into full tokens and wrecks the objective.
const ROUNDING_THRESHOLD: f64 = 0.5;

/// Threshold-and-top-k rounding followed by constraint repair.
///
/// Tokens breaking a per-token threshold can never survive repair, so they
/// are excluded up front rather than allowed to waste budget slots. The
/// remaining tokens at or above the rounding threshold are ranked by
/// relaxed value (ties to the lower index) and the best `max_tokens`
/// survive. For every surviving pair above the similarity bound, repair
/// drops the lower-valued member (the lower index survives a value tie)
/// until no violation remains. The result always passes [`check_feasible`];
/// the worst case is the empty selection.
pub fn round_and_repair(inst: &ProblemInstance, relaxed: &RelaxedSelection) -> SelectionVector {
    let n = inst.n();
    let c = &inst.constraints;
    debug_assert_eq!(relaxed.values.len(), n);

    let mut ranked: Vec<usize> = (0..n)
        .filter(|&i| {
            relaxed.values[i] >= ROUNDING_THRESHOLD
                && inst.bounds[i]
                && inst.attention[i] >= c.min_attention
                && inst.recon_error[i] <= c.max_recon_error
                && inst.kl[i] <= c.max_kl
                && inst.snr[i] >= c.min_snr
        })
        .collect();
    ranked.sort_by(|&a, &b| {
        relaxed.values[b].partial_cmp(&relaxed.values[a]).unwrap().then(a.cmp(&b))
    });
    ranked.truncate(c.max_tokens.min(ranked.len()));

    // pairwise repair: drop the lower-valued member of each offending pair
    let mut keep = ranked;
    loop {
        keep.sort_unstable();
        let mut offender: Option<usize> = None;
        'scan: for (a, &i) in keep.iter().enumerate() {
            for &j in &keep[a + 1..] {
                if inst.pair_similarity[i][j] > c.max_pair_similarity {
                    let drop_j = relaxed.values[j] <= relaxed.values[i];
                    offender = Some(if drop_j { j } else { i });
                    break 'scan;
                }
            }
        }
        match offender {
            Some(victim) => keep.retain(|&k| k != victim),
            None => break,
        }
    }

    let selection = SelectionVector::from_indices(n, &keep);
    debug_assert!(check_feasible(inst, &selection).satisfied(CONSTRAINT_TOLERANCE));
    selection
}
