//! Constrained semantic token selection.
//!
//! Minimizes `ir_weight * ||target - U s||^2 + cost_weight * c's` over binary
//! selections subject to a bandwidth budget, per-token attention,
//! reconstruction-error, KG-consistency and SNR thresholds, and a pairwise
//! redundancy bound. Four routes are provided:
//!
//! * [`brute_force`] - exact enumeration, the oracle for everything else;
//! * [`greedy_select`] - marginal-gain greedy over the filtered candidates;
//! * [`dual_ascent`] - continuous relaxation solved by alternating a box QP
//!   with projected multiplier updates;
//! * [`primal_dual_kkt`] - primal-dual iteration with stationarity and
//!   complementary-slackness checks, then rounding.
//!
//! All solvers are deterministic: identical instances produce bitwise
//! identical reports.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::losses::CostParams;
use crate::vecmath;

mod brute;
mod greedy;
mod kkt;
mod matroid;
mod qp;
mod rounding;
mod submodular;

pub use brute::brute_force;
pub use greedy::greedy_select;
pub use kkt::{dual_ascent, dual_ascent_with, primal_dual_kkt, primal_dual_kkt_with};
pub use matroid::{matroid_augment, Augmentation, IndependenceOracle, PartitionMatroid};
pub use qp::solve_relaxed_qp;
pub use rounding::round_and_repair;
pub use submodular::{diminishing_returns_check, SubmodularityReport};

/// Stationarity tolerance for the primal-dual solver.
pub const KKT_TOLERANCE: f64 = 1e-6;
/// Constraint-violation tolerance shared by all feasibility checks.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-6;
/// Gradient-projection tolerance of the inner box QP.
pub const QP_TOLERANCE: f64 = 1e-8;
/// Multiplier-change tolerance that stops dual ascent.
pub const DUAL_TOLERANCE: f64 = 1e-6;
/// Largest token count accepted by exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 22;

pub(crate) const DUAL_ASCENT_MAX_ITERS: usize = 5_000;
pub(crate) const KKT_MAX_ITERS: usize = 10_000;
pub(crate) const DEFAULT_DUAL_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum OptError {
    /// Exhaustive enumeration refused: too many tokens.
    InstanceTooLarge { tokens: usize, limit: usize },
    /// The instance failed validation.
    Invalid(String),
    /// A dual iterate left the reals; reports the step size in use.
    NonFiniteDual { step: f64 },
    /// A documented precondition does not hold.
    Precondition(String),
    /// Matroid augmentation found no admissible element or exchange.
    NoAugmentation,
}

impl core::fmt::Display for OptError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::InstanceTooLarge { tokens, limit } => {
                write!(f, "exhaustive search refused: {tokens} tokens exceed the limit of {limit}")
            }
            Self::Invalid(msg) => write!(f, "invalid problem instance: {msg}"),
            Self::NonFiniteDual { step } => {
                write!(f, "dual iterate diverged (non-finite) at step size {step}")
            }
            Self::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Self::NoAugmentation => write!(f, "no feasible augmentation or exchange exists"),
        }
    }
}

impl core::error::Error for OptError {}

/// Hard constraint thresholds of the selection problem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintParams {
    /// Bandwidth budget: maximum number of selected tokens.
    pub max_tokens: usize,
    /// Attention threshold below which a token is never selected.
    pub min_attention: f64,
    /// Largest admissible per-token reconstruction error.
    pub max_recon_error: f64,
    /// Largest admissible per-token KG divergence.
    pub max_kl: f64,
    /// Redundancy bound: selected pairs must not be more similar than this.
    pub max_pair_similarity: f64,
    /// Smallest admissible per-token linear SNR.
    pub min_snr: f64,
    /// Optional explicit pairwise slack for the relaxed redundancy
    /// constraint `s_i + s_j <= 1 + slack_ij`, flattened over pairs i < j.
    /// When absent, slack is 1 for pairs within the similarity bound
    /// (inactive) and 0 for pairs above it (mutual exclusion).
    #[cfg_attr(feature = "serde", serde(default))]
    pub pair_slack: Option<Vec<f64>>,
}

impl Default for ConstraintParams {
    fn default() -> Self {
        Self {
            max_tokens: usize::MAX,
            min_attention: 0.0,
            max_recon_error: f64::MAX,
            max_kl: f64::MAX,
            max_pair_similarity: 1.0,
            min_snr: f64::MIN_POSITIVE,
            pair_slack: None,
        }
    }
}

/// All data of one selection problem. Embeddings are the columns `u_i`,
/// `target` is the attention-weighted full-sentence embedding.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemInstance {
    pub embeddings: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub costs: Vec<f64>,
    pub attention: Vec<f64>,
    pub recon_error: Vec<f64>,
    pub snr: Vec<f64>,
    pub kl: Vec<f64>,
    pub pair_similarity: Vec<Vec<f64>>,
    pub bounds: Vec<bool>,
    pub constraints: ConstraintParams,
    pub weights: CostParams,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.embeddings.len()
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let n = self.n();
        if n == 0 {
            return Err(OptError::Invalid("instance has no tokens".into()));
        }
        let dim = self.dim();
        let check = |name: &str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(OptError::Invalid(alloc::format!("{name} has length {len}, expected {n}")))
            }
        };
        check("costs", self.costs.len())?;
        check("attention", self.attention.len())?;
        check("recon_error", self.recon_error.len())?;
        check("snr", self.snr.len())?;
        check("kl", self.kl.len())?;
        check("bounds", self.bounds.len())?;
        check("pair_similarity", self.pair_similarity.len())?;
        for (i, col) in self.embeddings.iter().enumerate() {
            if col.len() != dim {
                return Err(OptError::Invalid(alloc::format!(
                    "embedding {i} has dimension {}, expected {dim}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(OptError::Invalid(alloc::format!("embedding {i} is not finite")));
            }
        }
        if self.target.iter().any(|v| !v.is_finite()) {
            return Err(OptError::Invalid("target is not finite".into()));
        }
        for (name, values) in [("costs", &self.costs), ("kl", &self.kl)] {
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(OptError::Invalid(alloc::format!("{name} must be finite and >= 0")));
            }
        }
        if self.attention.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(OptError::Invalid("attention must lie in [0, 1]".into()));
        }
        if self.recon_error.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(OptError::Invalid("recon_error must be finite and >= 0".into()));
        }
        if self.snr.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(OptError::Invalid("snr must be finite and > 0".into()));
        }
        for (i, row) in self.pair_similarity.iter().enumerate() {
            check("pair_similarity row", row.len())?;
            if (row[i] - 1.0).abs() > 1e-9 {
                return Err(OptError::Invalid("pair_similarity diagonal must be 1".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || (v - self.pair_similarity[j][i]).abs() > 1e-9 {
                    return Err(OptError::Invalid("pair_similarity must be symmetric".into()));
                }
            }
        }
        if let Some(slack) = &self.pair_slack() {
            if slack.len() != n * (n - 1) / 2 {
                return Err(OptError::Invalid("pair_slack length must be n(n-1)/2".into()));
            }
        }
        if self.constraints.min_snr <= 0.0 {
            return Err(OptError::Invalid("min_snr must be positive".into()));
        }
        if self.constraints.max_recon_error < 0.0 || self.constraints.max_kl < 0.0 {
            return Err(OptError::Invalid("constraint thresholds must be >= 0".into()));
        }
        Ok(())
    }

    fn pair_slack(&self) -> Option<&Vec<f64>> {
        self.constraints.pair_slack.as_ref()
    }

    /// Slack of the relaxed redundancy constraint for the pair `(i, j)`:
    /// explicit when provided, otherwise 1 for compatible pairs and 0
    /// (mutual exclusion) for pairs above the similarity bound.
    pub fn redundancy_slack(&self, i: usize, j: usize) -> f64 {
        if let Some(slack) = self.pair_slack() {
            return slack[pair_index(self.n(), i, j)];
        }
        if self.pair_similarity[i][j] <= self.constraints.max_pair_similarity {
            1.0
        } else {
            0.0
        }
    }

    /// The selection objective at (possibly fractional) weights.
    pub fn objective_at(&self, selection: &[f64]) -> f64 {
        let aggregate = vecmath::weighted_sum(&self.embeddings, selection);
        let residual = vecmath::sub(&self.target, &aggregate);
        self.weights.ir_weight * vecmath::norm_sq(&residual)
            + self.weights.cost_weight * vecmath::dot(&self.costs, selection)
    }

    /// The box upper bounds as floats.
    pub fn bounds_f64(&self) -> Vec<f64> {
        self.bounds.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Flattened index of the unordered pair `(i, j)`, `i != j`, into a
/// `n*(n-1)/2` upper-triangle array.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    lo * n - lo * (lo + 1) / 2 + (hi - lo - 1)
}

/// A binary selection of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionVector {
    selected: Vec<bool>,
}

impl SelectionVector {
    pub fn empty(n: usize) -> Self {
        Self { selected: vec![false; n] }
    }

    pub fn from_flags(selected: Vec<bool>) -> Self {
        Self { selected }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut selected = vec![false; n];
        for &i in indices {
            selected[i] = true;
        }
        Self { selected }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.selected[i]
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.selected.len()).filter(|&i| self.selected[i]).collect()
    }

    pub fn flags(&self) -> &[bool] {
        &self.selected
    }

    pub fn as_weights(&self) -> Vec<f64> {
        self.selected.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// A fractional selection inside the box `[0, b_i]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelaxedSelection {
    pub values: Vec<f64>,
}

/// Dual variables of the relaxed problem, one family per constraint, plus
/// the ascent step size.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Multipliers {
    /// Bandwidth multiplier.
    pub budget: f64,
    /// Per-token KG-consistency multipliers.
    pub kg: Vec<f64>,
    /// Pairwise redundancy multipliers, flattened over pairs i < j.
    pub redundancy: Vec<f64>,
    /// Per-token reconstruction multipliers.
    pub recon: Vec<f64>,
    /// Per-token SNR multipliers.
    pub snr: Vec<f64>,
    /// Dual ascent step size.
    pub step: f64,
}

impl Multipliers {
    pub fn zeros(n: usize, step: f64) -> Self {
        Self {
            budget: 0.0,
            kg: vec![0.0; n],
            redundancy: vec![0.0; n * (n - 1) / 2],
            recon: vec![0.0; n],
            snr: vec![0.0; n],
            step,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.budget >= 0.0
            && self.step > 0.0
            && self.kg.iter().chain(&self.redundancy).chain(&self.recon).chain(&self.snr).all(
                |&v| v >= 0.0,
            )
    }

    pub fn is_finite(&self) -> bool {
        self.budget.is_finite()
            && self.kg.iter().chain(&self.redundancy).chain(&self.recon).chain(&self.snr).all(
                |v| v.is_finite(),
            )
    }

    /// Largest elementwise distance to `other`.
    pub fn max_change(&self, other: &Self) -> f64 {
        let mut change = (self.budget - other.budget).abs();
        for (a, b) in self
            .kg
            .iter()
            .chain(&self.redundancy)
            .chain(&self.recon)
            .chain(&self.snr)
            .zip(other.kg.iter().chain(&other.redundancy).chain(&other.recon).chain(&other.snr))
        {
            change = change.max((a - b).abs());
        }
        change
    }
}

/// Signed slack report for the six constraint families. Positive values are
/// violations; vacuously satisfied constraints (nothing selected) report 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintViolations {
    /// Selected count minus the budget.
    pub bandwidth: f64,
    /// Largest attention shortfall over selected tokens.
    pub importance: f64,
    /// Largest reconstruction-error excess over selected tokens.
    pub reconstruction: f64,
    /// Largest KG-divergence excess over selected tokens.
    pub kg_alignment: f64,
    /// Largest pairwise-similarity excess over selected pairs.
    pub redundancy: f64,
    /// Largest SNR shortfall over selected tokens.
    pub snr: f64,
    /// Selected pairs above the similarity bound.
    pub redundant_pairs: Vec<(usize, usize)>,
}

impl ConstraintViolations {
    pub fn max_violation(&self) -> f64 {
        self.bandwidth
            .max(self.importance)
            .max(self.reconstruction)
            .max(self.kg_alignment)
            .max(self.redundancy)
            .max(self.snr)
    }

    pub fn satisfied(&self, tolerance: f64) -> bool {
        self.max_violation() <= tolerance
    }
}

/// Evaluates the signed violation of every constraint at a binary selection.
/// Infeasibility is data, not an error.
pub fn check_feasible(inst: &ProblemInstance, selection: &SelectionVector) -> ConstraintViolations {
    let selected = selection.indices();
    let budget = inst.constraints.max_tokens;
    let bandwidth = selected.len() as f64 - if budget == usize::MAX { f64::MAX } else { budget as f64 };

    let fold = |values: &mut dyn Iterator<Item = f64>| -> f64 {
        values.fold(f64::NEG_INFINITY, f64::max)
    };
    let vacuous = |v: f64| if v == f64::NEG_INFINITY { 0.0 } else { v };

    let importance =
        vacuous(fold(&mut selected.iter().map(|&i| inst.constraints.min_attention - inst.attention[i])));
    let reconstruction = vacuous(fold(
        &mut selected.iter().map(|&i| inst.recon_error[i] - inst.constraints.max_recon_error),
    ));
    let kg_alignment =
        vacuous(fold(&mut selected.iter().map(|&i| inst.kl[i] - inst.constraints.max_kl)));
    let snr = vacuous(fold(&mut selected.iter().map(|&i| inst.constraints.min_snr - inst.snr[i])));

    let mut redundancy = f64::NEG_INFINITY;
    let mut redundant_pairs = Vec::new();
    for (a, &i) in selected.iter().enumerate() {
        for &j in &selected[a + 1..] {
            let excess = inst.pair_similarity[i][j] - inst.constraints.max_pair_similarity;
            redundancy = redundancy.max(excess);
            if excess > 0.0 {
                redundant_pairs.push((i, j));
            }
        }
    }

    ConstraintViolations {
        bandwidth: if bandwidth == f64::NEG_INFINITY { 0.0 } else { bandwidth },
        importance,
        reconstruction,
        kg_alignment,
        redundancy: vacuous(redundancy),
        snr,
        redundant_pairs,
    }
}

/// Value of the relaxed problem's Lagrangian at fractional weights.
///
/// Linear penalties are added for the budget, KG, redundancy, reconstruction
/// and SNR constraints; the box bounds stay implicit in the inner solver.
pub fn lagrangian(inst: &ProblemInstance, selection: &[f64], mult: &Multipliers) -> f64 {
    let n = inst.n();
    let mut value = inst.objective_at(selection);
    let total: f64 = selection.iter().sum();
    if inst.constraints.max_tokens != usize::MAX {
        value += mult.budget * (total - inst.constraints.max_tokens as f64);
    }
    for i in 0..n {
        value += mult.kg[i] * (inst.kl[i] - inst.constraints.max_kl);
        value += mult.recon[i] * (inst.recon_error[i] - inst.constraints.max_recon_error) * selection[i];
        value += mult.snr[i] * (inst.constraints.min_snr - inst.snr[i]) * selection[i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            value += mult.redundancy[pair_index(n, i, j)]
                * (selection[i] + selection[j] - 1.0 - inst.redundancy_slack(i, j));
        }
    }
    value
}

/// Stationarity gradient of the Lagrangian with respect to each selection
/// weight: `-2 w_ir u_i'(target - U s) + w_cost c_i` plus the linear
/// multiplier terms. The KG penalty is constant in `s` and contributes
/// nothing.
pub fn lagrangian_grad(inst: &ProblemInstance, selection: &[f64], mult: &Multipliers) -> Vec<f64> {
    let n = inst.n();
    let aggregate = vecmath::weighted_sum(&inst.embeddings, selection);
    let residual = vecmath::sub(&inst.target, &aggregate);
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let mut g = -2.0 * inst.weights.ir_weight * vecmath::dot(&inst.embeddings[i], &residual)
            + inst.weights.cost_weight * inst.costs[i];
        if inst.constraints.max_tokens != usize::MAX {
            g += mult.budget;
        }
        for j in 0..n {
            if j != i {
                g += mult.redundancy[pair_index(n, i, j)];
            }
        }
        g += mult.recon[i] * (inst.recon_error[i] - inst.constraints.max_recon_error);
        g += mult.snr[i] * (inst.constraints.min_snr - inst.snr[i]);
        grad.push(g);
    }
    grad
}

/// One recorded iteration of a dual solver.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub iteration: usize,
    /// Original objective at the current relaxed selection.
    pub objective: f64,
    /// Lagrangian value at the inner minimizer: a lower bound on every
    /// feasible binary objective.
    pub dual_value: f64,
    /// Largest projected stationarity residual.
    pub residual: f64,
    /// Dual step size in effect.
    pub step: f64,
    /// Full multiplier state, recorded only when tracing is requested.
    pub multipliers: Option<Multipliers>,
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub selection: SelectionVector,
    /// Objective of the returned binary selection.
    pub objective: f64,
    /// Final dual lower bound, for the relaxation-based solvers.
    pub dual_value: Option<f64>,
    pub iterations: usize,
    /// Final projected stationarity residual, for the primal-dual solver.
    pub kkt_residual: Option<f64>,
    pub violations: ConstraintViolations,
    pub feasible: bool,
    pub converged: bool,
    /// Per-iteration history, populated when tracing is requested.
    pub trace: Option<Vec<TraceRow>>,
    /// Final fractional iterate of the relaxation-based solvers.
    pub relaxed: Option<RelaxedSelection>,
    /// Final dual variables of the relaxation-based solvers.
    pub multipliers: Option<Multipliers>,
}

impl SolveReport {
    pub(crate) fn for_selection(inst: &ProblemInstance, selection: SelectionVector) -> Self {
        let violations = check_feasible(inst, &selection);
        let feasible = violations.satisfied(CONSTRAINT_TOLERANCE);
        let objective = inst.objective_at(&selection.as_weights());
        Self {
            selection,
            objective,
            dual_value: None,
            iterations: 0,
            kkt_residual: None,
            violations,
            feasible,
            converged: true,
            trace: None,
            relaxed: None,
            multipliers: None,
        }
    }
}

/// How verbose a relaxation-based solver should be.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    /// Record a [`TraceRow`] per iteration.
    pub trace: bool,
    /// Include full multiplier state in each trace row.
    pub trace_multipliers: bool,
}
