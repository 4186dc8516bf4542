//! Exhaustive enumeration over all binary selections respecting the bounds.
//! The independent oracle for the approximate solvers; guarded to small
//! instances since the search is exponential.

use alloc::vec::Vec;

use super::{
    check_feasible, OptError, ProblemInstance, SelectionVector, SolveReport, BRUTE_FORCE_LIMIT,
    CONSTRAINT_TOLERANCE,
};

/// Lexicographic order on selection flags: the first differing position
/// decides, unselected before selected.
fn lex_less(a: &SelectionVector, b: &SelectionVector) -> bool {
    for (x, y) in a.flags().iter().zip(b.flags()) {
        if x != y {
            return !x;
        }
    }
    false
}

/// Enumerates every selection within the bounds and returns the feasible
/// objective minimizer. Ties break toward fewer selected tokens, then the
/// lexicographically smallest selection.
pub fn brute_force(inst: &ProblemInstance) -> Result<SolveReport, OptError> {
    inst.validate()?;
    let n = inst.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(OptError::InstanceTooLarge { tokens: n, limit: BRUTE_FORCE_LIMIT });
    }

    let free: Vec<usize> = (0..n).filter(|&i| inst.bounds[i]).collect();
    let mut best: Option<(f64, SelectionVector)> = None;
    let mut evaluated = 0usize;

    for mask in 0u64..(1u64 << free.len()) {
        let mut flags = alloc::vec![false; n];
        for (bit, &idx) in free.iter().enumerate() {
            flags[idx] = mask >> bit & 1 == 1;
        }
        let candidate = SelectionVector::from_flags(flags);
        if !check_feasible(inst, &candidate).satisfied(CONSTRAINT_TOLERANCE) {
            continue;
        }
        evaluated += 1;
        let objective = inst.objective_at(&candidate.as_weights());
        let better = match &best {
            None => true,
            Some((incumbent, holder)) => {
                objective < *incumbent
                    || (objective == *incumbent
                        && (candidate.count() < holder.count()
                            || (candidate.count() == holder.count()
                                && lex_less(&candidate, holder))))
            }
        };
        if better {
            best = Some((objective, candidate));
        }
    }

    match best {
        Some((_, selection)) => {
            let mut report = SolveReport::for_selection(inst, selection);
            report.iterations = evaluated;
            Ok(report)
        }
        None => {
            // Unreachable in practice: the empty selection satisfies every
            // constraint family vacuously. Kept for robustness.
            let mut report = SolveReport::for_selection(inst, SelectionVector::empty(n));
            report.feasible = false;
            report.converged = true;
            Ok(report)
        }
    }
}
