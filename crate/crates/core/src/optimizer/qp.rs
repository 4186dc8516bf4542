//! Inner quadratic program: minimize the Lagrangian over the box
//! `0 <= s_i <= b_i`, optionally intersected with the budget simplex
//! `sum s_i <= k`. Spectral projected gradient with a backtracking line
//! search; dependency-free and deterministic.
//!
//! The Lagrangian is quadratic in the selection, so each solve reduces it to
//! `constant + linear's + 1/2 s'H s` with `H = 2 ir_weight U'U` cached
//! across calls; gradients and function values then cost one mat-vec.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    pair_index, Multipliers, OptError, ProblemInstance, RelaxedSelection, QP_TOLERANCE,
};
use crate::vecmath;

const MAX_INNER_ITERS: usize = 20_000;
const ARMIJO: f64 = 1e-4;
const STEP_FLOOR: f64 = 1e-18;

/// Clamp into the box.
fn project_box(values: &mut [f64], upper: &[f64]) {
    for (v, &u) in values.iter_mut().zip(upper) {
        *v = v.clamp(0.0, u);
    }
}

/// Euclidean projection onto `{0 <= s <= upper, sum s <= budget}`.
///
/// If the plain box clamp already satisfies the budget it is the projection;
/// otherwise the budget is active and the projection is
/// `clamp(v - t, 0, upper)` for the unique shift `t >= 0` making the sum hit
/// the budget, found by bisection. The shift applies to the *unclamped*
/// input: clamping first and shifting after is not the Euclidean projection
/// (an engaged upper bound would absorb part of the shift and redistribute
/// mass between coordinates).
pub(crate) fn project_box_budget(values: &mut [f64], upper: &[f64], budget: Option<usize>) {
    let Some(budget) = budget else {
        project_box(values, upper);
        return;
    };
    let raw = values.to_vec();
    project_box(values, upper);
    let budget = budget as f64;
    let total: f64 = values.iter().sum();
    if total <= budget {
        return;
    }
    let shifted_sum =
        |t: f64| -> f64 { raw.iter().zip(upper).map(|(&v, &u)| (v - t).clamp(0.0, u)).sum() };
    let mut lo = 0.0;
    let mut hi = raw.iter().cloned().fold(0.0, f64::max);
    for _ in 0..110 {
        let mid = 0.5 * (lo + hi);
        if shifted_sum(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    for (v, (&r, &u)) in values.iter_mut().zip(raw.iter().zip(upper)) {
        *v = (r - hi).clamp(0.0, u);
    }
}

/// Quadratic form of the Lagrangian for a fixed instance and multipliers:
/// `value(s) = constant + linear's + 1/2 s'H s`.
pub(crate) struct QuadraticForm<'a> {
    gram: &'a [Vec<f64>],
    linear: Vec<f64>,
    constant: f64,
}

/// Instance data reused across every QP call of a solver run.
pub(crate) struct InstanceCache {
    /// `H = 2 ir_weight U'U`.
    gram: Vec<Vec<f64>>,
    /// `U'target`.
    target_dots: Vec<f64>,
    /// `ir_weight * ||target||^2`.
    target_norm_term: f64,
}

impl InstanceCache {
    pub fn new(inst: &ProblemInstance) -> Self {
        let n = inst.n();
        let gram = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        2.0 * inst.weights.ir_weight
                            * vecmath::dot(&inst.embeddings[i], &inst.embeddings[j])
                    })
                    .collect()
            })
            .collect();
        let target_dots =
            (0..n).map(|i| vecmath::dot(&inst.embeddings[i], &inst.target)).collect();
        Self {
            gram,
            target_dots,
            target_norm_term: inst.weights.ir_weight * vecmath::norm_sq(&inst.target),
        }
    }

    /// Builds the quadratic form of the Lagrangian at these multipliers.
    pub fn quadratic<'a>(
        &'a self,
        inst: &ProblemInstance,
        mult: &Multipliers,
    ) -> QuadraticForm<'a> {
        let n = inst.n();
        let c = &inst.constraints;
        let mut constant = self.target_norm_term;
        if c.max_tokens != usize::MAX {
            constant -= mult.budget * c.max_tokens as f64;
        }
        let mut linear = vec![0.0; n];
        for i in 0..n {
            constant += mult.kg[i] * (inst.kl[i] - c.max_kl);
            linear[i] = -2.0 * inst.weights.ir_weight * self.target_dots[i]
                + inst.weights.cost_weight * inst.costs[i]
                + mult.recon[i] * (inst.recon_error[i] - c.max_recon_error)
                + mult.snr[i] * (c.min_snr - inst.snr[i]);
            if c.max_tokens != usize::MAX {
                linear[i] += mult.budget;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let nu = mult.redundancy[pair_index(n, i, j)];
                constant -= nu * (1.0 + inst.redundancy_slack(i, j));
                linear[i] += nu;
                linear[j] += nu;
            }
        }
        QuadraticForm { gram: &self.gram, linear, constant }
    }
}

impl QuadraticForm<'_> {
    pub fn value(&self, s: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (i, row) in self.gram.iter().enumerate() {
            quad += s[i] * vecmath::dot(row, s);
        }
        self.constant + vecmath::dot(&self.linear, s) + 0.5 * quad
    }

    pub fn gradient(&self, s: &[f64], out: &mut [f64]) {
        for ((g, row), lin) in out.iter_mut().zip(self.gram).zip(&self.linear) {
            *g = lin + vecmath::dot(row, s);
        }
    }

    fn curvature_along(&self, d: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (i, row) in self.gram.iter().enumerate() {
            quad += d[i] * vecmath::dot(row, d);
        }
        quad
    }
}

/// Fixed-point residual of the projected-gradient map: zero exactly at a
/// KKT point of the box(-budget) constrained minimization, and equal to the
/// raw gradient at interior points.
pub(crate) fn projection_residual(
    selection: &[f64],
    grad: &[f64],
    upper: &[f64],
    budget: Option<usize>,
) -> f64 {
    let mut stepped: Vec<f64> = selection.iter().zip(grad).map(|(s, g)| s - g).collect();
    project_box_budget(&mut stepped, upper, budget);
    selection.iter().zip(&stepped).map(|(s, p)| (s - p).abs()).fold(0.0, f64::max)
}

pub(crate) struct QpSolution {
    pub selection: Vec<f64>,
    pub residual: f64,
}

/// Spectral projected gradient descent from `start`.
///
/// Each iteration projects a Barzilai-Borwein-scaled gradient step and walks
/// the resulting feasible direction with a nonmonotone backtracking line
/// search (sufficient decrease against the worst of the last few accepted
/// values, which keeps the spectral steps effective on ill-conditioned
/// problems). The line-search trial starts at the exact quadratic minimizer
/// along the direction, so it accepts almost always on the first evaluation.
pub(crate) fn solve_box_qp(
    quad: &QuadraticForm<'_>,
    start: &[f64],
    upper: &[f64],
    budget: Option<usize>,
    tolerance: f64,
) -> QpSolution {
    let n = start.len();
    let mut s = start.to_vec();
    project_box_budget(&mut s, upper, budget);

    let mut grad = vec![0.0; n];
    quad.gradient(&s, &mut grad);
    let mut value = quad.value(&s);
    // nonmonotone reference window (Grippo-style, length 10)
    let mut recent = [value; 10];
    let mut recent_slot = 0;
    let mut spectral = 1.0;
    let mut residual = f64::MAX;

    for _ in 0..MAX_INNER_ITERS {
        residual = projection_residual(&s, &grad, upper, budget);
        if residual <= tolerance {
            break;
        }

        // feasible direction: projected spectral step minus current point
        let mut trial: Vec<f64> =
            s.iter().zip(&grad).map(|(si, gi)| si - spectral * gi).collect();
        project_box_budget(&mut trial, upper, budget);
        let direction: Vec<f64> = trial.iter().zip(&s).map(|(t, si)| t - si).collect();
        let slope = vecmath::dot(&grad, &direction);
        if slope >= 0.0 {
            break; // no descent available: numerically at the minimum
        }

        // full spectral move first (the source of the method's speed);
        // on rejection fall back to the exact quadratic minimizer along the
        // direction, which always satisfies the sufficient decrease
        let curvature = quad.curvature_along(&direction);
        let exact = if curvature > 0.0 { (-slope / curvature).min(1.0) } else { 1.0 };
        let mut step = 1.0;

        let reference = recent.iter().cloned().fold(f64::MIN, f64::max);
        let mut accepted = false;
        while step > STEP_FLOOR {
            let candidate: Vec<f64> =
                s.iter().zip(&direction).map(|(si, di)| si + step * di).collect();
            let candidate_value = quad.value(&candidate);
            if candidate_value <= reference + ARMIJO * step * slope {
                let mut new_grad = vec![0.0; n];
                quad.gradient(&candidate, &mut new_grad);

                // Barzilai-Borwein scaling from the accepted move
                let mut displacement_sq = 0.0;
                let mut displacement_dot_dgrad = 0.0;
                for i in 0..n {
                    let dx = candidate[i] - s[i];
                    let dg = new_grad[i] - grad[i];
                    displacement_sq += dx * dx;
                    displacement_dot_dgrad += dx * dg;
                }
                spectral = if displacement_dot_dgrad > 1e-16 {
                    (displacement_sq / displacement_dot_dgrad).clamp(1e-10, 1e10)
                } else {
                    1e10
                };

                s = candidate;
                grad = new_grad;
                value = candidate_value;
                recent[recent_slot] = value;
                recent_slot = (recent_slot + 1) % recent.len();
                accepted = true;
                break;
            }
            step = if step > exact { exact } else { step * 0.5 };
        }
        if !accepted {
            break; // step underflow: numerically at the constrained minimum
        }
    }

    QpSolution { selection: s, residual }
}

/// Minimizes the Lagrangian over the box `0 <= s_i <= b_i` from a zero
/// start, to a gradient-projection residual of at most 1e-8.
pub fn solve_relaxed_qp(
    inst: &ProblemInstance,
    mult: &Multipliers,
) -> Result<RelaxedSelection, OptError> {
    inst.validate()?;
    if !mult.is_nonnegative() {
        return Err(OptError::Precondition("multipliers must be nonnegative".into()));
    }
    if !mult.is_finite() {
        return Err(OptError::Precondition("multipliers must be finite".into()));
    }
    let cache = InstanceCache::new(inst);
    let quad = cache.quadratic(inst, mult);
    let upper = inst.bounds_f64();
    let start = vec![0.0; inst.n()];
    let solution = solve_box_qp(&quad, &start, &upper, None, QP_TOLERANCE);
    Ok(RelaxedSelection { values: solution.selection })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::CostParams;
    use crate::optimizer::{lagrangian, lagrangian_grad, ConstraintParams};

    fn orthonormal_instance() -> ProblemInstance {
        ProblemInstance {
            embeddings: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            target: vec![1.0, 0.0, 0.0],
            costs: vec![0.0; 3],
            attention: vec![1.0; 3],
            recon_error: vec![0.0; 3],
            snr: vec![1.0; 3],
            kl: vec![0.0; 3],
            pair_similarity: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            bounds: vec![true; 3],
            constraints: ConstraintParams::default(),
            weights: CostParams { ir_weight: 1.0, cost_weight: 1.0, kappa: 1.0 },
        }
    }

    #[test]
    fn quadratic_form_matches_lagrangian() {
        let inst = crate::testgen::mixed_instance(3);
        let n = inst.n();
        let rng = crate::rng::CounterRng::new(77);
        let mut mult = Multipliers::zeros(n, 0.05);
        mult.budget = 0.3;
        for i in 0..n {
            mult.kg[i] = rng.uniform(0, i as u64);
            mult.recon[i] = rng.uniform(1, i as u64);
            mult.snr[i] = rng.uniform(2, i as u64);
        }
        for (k, slot) in mult.redundancy.iter_mut().enumerate() {
            *slot = rng.uniform(3, k as u64);
        }
        let cache = InstanceCache::new(&inst);
        let quad = cache.quadratic(&inst, &mult);
        for t in 0..20 {
            let s: Vec<f64> = (0..n).map(|i| rng.uniform(4, (t * n + i) as u64)).collect();
            let direct = lagrangian(&inst, &s, &mult);
            let reduced = quad.value(&s);
            assert!(
                (direct - reduced).abs() <= 1e-9 * direct.abs().max(1.0),
                "{direct} vs {reduced}"
            );
            let mut grad = vec![0.0; n];
            quad.gradient(&s, &mut grad);
            let full = lagrangian_grad(&inst, &s, &mult);
            for (a, b) in grad.iter().zip(&full) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn recovers_least_squares_solution() {
        let inst = orthonormal_instance();
        let mult = Multipliers::zeros(3, 0.05);
        let s = solve_relaxed_qp(&inst, &mult).unwrap().values;
        assert!((s[0] - 1.0).abs() < 1e-6, "{s:?}");
        assert!(s[1].abs() < 1e-6);
        assert!(s[2].abs() < 1e-6);
    }

    #[test]
    fn degenerate_box_pins_to_zero() {
        let mut inst = orthonormal_instance();
        inst.bounds = vec![false; 3];
        let mult = Multipliers::zeros(3, 0.05);
        let s = solve_relaxed_qp(&inst, &mult).unwrap().values;
        assert_eq!(s, vec![0.0; 3]);
    }

    #[test]
    fn objective_is_midpoint_convex_along_segments() {
        let inst = orthonormal_instance();
        let mult = Multipliers::zeros(3, 0.05);
        let rng = crate::rng::CounterRng::new(9);
        for t in 0..200 {
            let a: Vec<f64> = (0..3).map(|i| rng.uniform(0, 3 * t + i as u64)).collect();
            let b: Vec<f64> = (0..3).map(|i| rng.uniform(1, 3 * t + i as u64)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let lhs = lagrangian(&inst, &mid, &mult);
            let rhs = 0.5 * lagrangian(&inst, &a, &mult) + 0.5 * lagrangian(&inst, &b, &mult);
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn rejects_negative_multipliers() {
        let inst = orthonormal_instance();
        let mut mult = Multipliers::zeros(3, 0.05);
        mult.budget = -1.0;
        assert!(solve_relaxed_qp(&inst, &mult).is_err());
    }

    #[test]
    fn budget_projection_caps_the_sum() {
        let upper = vec![1.0; 4];
        let mut values = vec![0.9, 0.8, 0.7, 0.6];
        project_box_budget(&mut values, &upper, Some(2));
        let total: f64 = values.iter().sum();
        assert!(total <= 2.0 + 1e-9);
        // ordering is preserved by a uniform shift
        assert!(values[0] >= values[1] && values[1] >= values[2] && values[2] >= values[3]);
    }

    #[test]
    fn budget_projection_noop_when_slack() {
        let upper = vec![1.0; 3];
        let mut values = vec![0.2, 0.1, 0.3];
        project_box_budget(&mut values, &upper, Some(3));
        assert_eq!(values, vec![0.2, 0.1, 0.3]);
    }

    #[test]
    fn warm_start_converges_to_same_point() {
        let inst = crate::testgen::mixed_instance(5);
        let mult = Multipliers::zeros(inst.n(), 0.05);
        let cache = InstanceCache::new(&inst);
        let quad = cache.quadratic(&inst, &mult);
        let upper = inst.bounds_f64();
        let cold = solve_box_qp(&quad, &vec![0.0; inst.n()], &upper, None, 1e-10);
        let warm_start: Vec<f64> = upper.iter().map(|&u| 0.9 * u).collect();
        let warm = solve_box_qp(&quad, &warm_start, &upper, None, 1e-10);
        for (a, b) in cold.selection.iter().zip(&warm.selection) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
