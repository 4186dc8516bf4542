//! Relaxation-based solvers: plain Lagrangian dual ascent, and the
//! primal-dual iteration that additionally tracks stationarity and
//! constraint violations before rounding.

use alloc::vec;
use alloc::vec::Vec;

use super::qp::{projection_residual, solve_box_qp, InstanceCache};
use super::{
    round_and_repair, Multipliers, OptError, ProblemInstance, RelaxedSelection, SolveReport,
    SolverOptions, TraceRow, CONSTRAINT_TOLERANCE, DEFAULT_DUAL_STEP, DUAL_ASCENT_MAX_ITERS,
    DUAL_TOLERANCE, KKT_MAX_ITERS, KKT_TOLERANCE, QP_TOLERANCE,
};

/// Multiplicative step growth applied while the dual keeps ascending; the
/// step halves whenever the dual value drops, so the schedule adapts to the
/// curvature of each constraint without losing convergence.
const STEP_GROWTH: f64 = 1.05;
const STEP_CEILING: f64 = 10.0;

fn adapt_step(step: &mut f64, dual: f64, previous: f64) {
    if dual < previous - 1e-12 {
        *step *= 0.5;
    } else {
        *step = (*step * STEP_GROWTH).min(STEP_CEILING);
    }
}

/// Dual update of the ascent loop: each multiplier moves along its
/// constraint violation and is projected back to the nonnegative orthant.
/// The reconstruction and SNR violations here are the relaxed per-token
/// forms `recon_i * s_i - eps` and `s_i * (min_snr - snr_i)`.
fn ascent_update(inst: &ProblemInstance, s: &[f64], mult: &Multipliers) -> Multipliers {
    let n = inst.n();
    let step = mult.step;
    let c = &inst.constraints;
    let mut next = mult.clone();

    if c.max_tokens != usize::MAX {
        let total: f64 = s.iter().sum();
        next.budget = (mult.budget + step * (total - c.max_tokens as f64)).max(0.0);
    }
    for i in 0..n {
        next.kg[i] = (mult.kg[i] + step * (inst.kl[i] - c.max_kl)).max(0.0);
        next.recon[i] =
            (mult.recon[i] + step * (inst.recon_error[i] * s[i] - c.max_recon_error)).max(0.0);
        next.snr[i] = (mult.snr[i] + step * (s[i] * (c.min_snr - inst.snr[i]))).max(0.0);
    }
    update_redundancy(inst, s, step, mult, &mut next);
    next
}

fn update_redundancy(
    inst: &ProblemInstance,
    s: &[f64],
    step: f64,
    mult: &Multipliers,
    next: &mut Multipliers,
) {
    let n = inst.n();
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            next.redundancy[k] = (mult.redundancy[k]
                + step * (s[i] + s[j] - 1.0 - inst.redundancy_slack(i, j)))
            .max(0.0);
            k += 1;
        }
    }
}

/// Constraint violations in the product forms used by the primal-dual
/// iteration: `(recon_i - eps) * s_i` and `s_i * (min_snr - snr_i)`.
fn primal_dual_max_violation(inst: &ProblemInstance, s: &[f64]) -> f64 {
    let n = inst.n();
    let c = &inst.constraints;
    let mut max = f64::NEG_INFINITY;
    if c.max_tokens != usize::MAX {
        max = max.max(s.iter().sum::<f64>() - c.max_tokens as f64);
    }
    for i in 0..n {
        if c.max_kl != f64::MAX {
            max = max.max(inst.kl[i] - c.max_kl);
        }
        if c.max_recon_error != f64::MAX {
            max = max.max((inst.recon_error[i] - c.max_recon_error) * s[i]);
        }
        max = max.max(s[i] * (c.min_snr - inst.snr[i]));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            max = max.max(s[i] + s[j] - 1.0 - inst.redundancy_slack(i, j));
        }
    }
    if max == f64::NEG_INFINITY {
        0.0
    } else {
        max
    }
}

fn primal_dual_update(inst: &ProblemInstance, s: &[f64], mult: &Multipliers) -> Multipliers {
    let n = inst.n();
    let step = mult.step;
    let c = &inst.constraints;
    let mut next = mult.clone();

    if c.max_tokens != usize::MAX {
        let total: f64 = s.iter().sum();
        next.budget = (mult.budget + step * (total - c.max_tokens as f64)).max(0.0);
    }
    for i in 0..n {
        next.kg[i] = (mult.kg[i] + step * (inst.kl[i] - c.max_kl)).max(0.0);
        next.recon[i] =
            (mult.recon[i] + step * ((inst.recon_error[i] - c.max_recon_error) * s[i])).max(0.0);
        next.snr[i] = (mult.snr[i] + step * (s[i] * (c.min_snr - inst.snr[i]))).max(0.0);
    }
    update_redundancy(inst, s, step, mult, &mut next);
    next
}

/// Lagrangian dual ascent: alternate the inner box QP with projected
/// multiplier updates until the multipliers stabilize, then round.
pub fn dual_ascent(inst: &ProblemInstance) -> Result<SolveReport, OptError> {
    dual_ascent_with(inst, &SolverOptions::default())
}

pub fn dual_ascent_with(
    inst: &ProblemInstance,
    options: &SolverOptions,
) -> Result<SolveReport, OptError> {
    inst.validate()?;
    let n = inst.n();
    let cache = InstanceCache::new(inst);
    let upper = inst.bounds_f64();
    let mut mult = Multipliers::zeros(n, DEFAULT_DUAL_STEP);
    let mut s = vec![0.0; n];
    let mut previous_dual = f64::NEG_INFINITY;
    let mut dual_value = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut trace = options.trace.then(Vec::new);

    for iter in 1..=DUAL_ASCENT_MAX_ITERS {
        iterations = iter;
        let quad = cache.quadratic(inst, &mult);
        let solution = solve_box_qp(&quad, &s, &upper, None, QP_TOLERANCE);
        s = solution.selection;

        dual_value = quad.value(&s);
        if !dual_value.is_finite() {
            return Err(OptError::NonFiniteDual { step: mult.step });
        }
        adapt_step(&mut mult.step, dual_value, previous_dual);
        previous_dual = dual_value;

        if let Some(rows) = &mut trace {
            rows.push(TraceRow {
                iteration: iter,
                objective: inst.objective_at(&s),
                dual_value,
                residual: solution.residual,
                step: mult.step,
                multipliers: options.trace_multipliers.then(|| mult.clone()),
            });
        }

        let next = ascent_update(inst, &s, &mult);
        let change = mult.max_change(&next);
        mult = next;
        if change < DUAL_TOLERANCE {
            converged = true;
            break;
        }
    }

    let selection = round_and_repair(inst, &RelaxedSelection { values: s.clone() });
    let mut report = SolveReport::for_selection(inst, selection);
    report.iterations = iterations;
    report.dual_value = Some(dual_value);
    report.converged = converged;
    report.trace = trace;
    report.relaxed = Some(RelaxedSelection { values: s });
    report.multipliers = Some(mult);
    Ok(report)
}

/// Primal-dual iteration: constrained primal update (box plus budget),
/// stationarity and violation checks, dual ascent, then rounding.
///
/// The stationarity residual is the projected-gradient fixed point residual,
/// which eliminates the implicit box and budget multipliers; at interior
/// points it equals the raw Lagrangian gradient.
pub fn primal_dual_kkt(inst: &ProblemInstance) -> Result<SolveReport, OptError> {
    primal_dual_kkt_with(inst, &SolverOptions::default())
}

pub fn primal_dual_kkt_with(
    inst: &ProblemInstance,
    options: &SolverOptions,
) -> Result<SolveReport, OptError> {
    inst.validate()?;
    let n = inst.n();
    let cache = InstanceCache::new(inst);
    let upper = inst.bounds_f64();
    let budget =
        (inst.constraints.max_tokens != usize::MAX).then_some(inst.constraints.max_tokens);
    let mut mult = Multipliers::zeros(n, DEFAULT_DUAL_STEP);
    let mut s = vec![0.0; n];
    let mut previous_dual = f64::NEG_INFINITY;
    let mut dual_value = f64::NEG_INFINITY;
    let mut stationarity = f64::MAX;
    let mut converged = false;
    let mut iterations = 0;
    let mut trace = options.trace.then(Vec::new);

    for iter in 1..=KKT_MAX_ITERS {
        iterations = iter;
        let quad = cache.quadratic(inst, &mult);
        let solution = solve_box_qp(&quad, &s, &upper, budget, QP_TOLERANCE);
        s = solution.selection;

        let mut grad = vec![0.0; n];
        quad.gradient(&s, &mut grad);
        stationarity = projection_residual(&s, &grad, &upper, budget);
        let max_violation = primal_dual_max_violation(inst, &s);

        dual_value = quad.value(&s);
        if !dual_value.is_finite() {
            return Err(OptError::NonFiniteDual { step: mult.step });
        }
        adapt_step(&mut mult.step, dual_value, previous_dual);
        previous_dual = dual_value;

        mult = primal_dual_update(inst, &s, &mult);

        if let Some(rows) = &mut trace {
            rows.push(TraceRow {
                iteration: iter,
                objective: inst.objective_at(&s),
                dual_value,
                residual: stationarity,
                step: mult.step,
                multipliers: options.trace_multipliers.then(|| mult.clone()),
            });
        }

        if stationarity <= KKT_TOLERANCE && max_violation <= CONSTRAINT_TOLERANCE {
            converged = true;
            break;
        }
    }

    let selection = round_and_repair(inst, &RelaxedSelection { values: s.clone() });
    let mut report = SolveReport::for_selection(inst, selection);
    report.iterations = iterations;
    report.dual_value = Some(dual_value);
    report.kkt_residual = Some(stationarity);
    report.converged = converged;
    report.trace = trace;
    report.relaxed = Some(RelaxedSelection { values: s });
    report.multipliers = Some(mult);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::tests::small_instance;
    use super::*;
    use crate::optimizer::brute_force;

    #[test]
    fn slack_instance_keeps_multipliers_at_zero() {
        let mut inst = small_instance();
        inst.constraints.max_tokens = 3; // budget cannot bind
        let report = dual_ascent(&inst).unwrap();
        assert!(report.converged);
        let mult = report.multipliers.unwrap();
        assert!(mult.budget.abs() < 1e-6);
        assert!(mult.recon.iter().all(|&v| v < 1e-6));
        assert!(mult.snr.iter().all(|&v| v < 1e-6));
    }

    #[test]
    fn dual_value_lower_bounds_brute_force() {
        let inst = small_instance();
        let brute = brute_force(&inst).unwrap();
        let dual = dual_ascent(&inst).unwrap();
        assert!(dual.dual_value.unwrap() <= brute.objective + 1e-8);
        let kkt = primal_dual_kkt(&inst).unwrap();
        assert!(kkt.dual_value.unwrap() <= brute.objective + 1e-8);
    }

    #[test]
    fn binding_budget_yields_positive_multiplier() {
        // two useful orthogonal tokens, budget 1: the bandwidth constraint
        // binds and its multiplier settles strictly positive
        let mut inst = small_instance();
        inst.embeddings = alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]];
        inst.target = alloc::vec![1.0, 1.0];
        inst.costs = alloc::vec![0.0, 0.0];
        inst.attention = alloc::vec![1.0, 1.0];
        inst.recon_error = alloc::vec![0.0, 0.0];
        inst.snr = alloc::vec![10.0, 10.0];
        inst.kl = alloc::vec![0.0, 0.0];
        inst.pair_similarity = alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]];
        inst.bounds = alloc::vec![true, true];
        inst.constraints.max_tokens = 1;
        let report = dual_ascent(&inst).unwrap();
        assert!(report.converged, "iterations: {}", report.iterations);
        let mult = report.multipliers.unwrap();
        assert!(mult.budget > 1e-3, "budget multiplier {}", mult.budget);
        assert_eq!(report.selection.count(), 1);
    }

    #[test]
    fn kkt_interior_optimum_has_zero_multipliers_and_residual() {
        let mut inst = small_instance();
        // target strictly inside the box image: U * (0.5, 0.25, 0.25)
        inst.target = alloc::vec![0.75, 0.5];
        inst.costs = alloc::vec![0.0, 0.0, 0.0];
        inst.constraints.max_tokens = 3;
        let report = primal_dual_kkt(&inst).unwrap();
        assert!(report.converged);
        assert!(report.kkt_residual.unwrap() <= KKT_TOLERANCE);
        let mult = report.multipliers.unwrap();
        assert!(mult.budget.abs() < 1e-9);
        assert!(mult.redundancy.iter().all(|&v| v == 0.0));
    }
}
