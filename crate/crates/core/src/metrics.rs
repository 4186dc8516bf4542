//! Reconstruction-quality metrics between an original and a decoded sentence.
//!
//! Four complementary scores: n-gram overlap (syntactic fidelity), cosine
//! similarity of sentence embeddings (meaning preservation), clipped
//! token-level precision (accuracy) and clipped token-level recall
//! (completeness). All scores live in [0, 1] and equal 1 on identical input.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;


#[allow(unused_imports)] // no_std float math; test builds link std and shadow the trait
use num_traits::Float;

use crate::vecmath;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptyInput(&'static str),
    DimensionMismatch { left: usize, right: usize },
    ZeroVector(&'static str),
    InvalidWeights(&'static str),
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::EmptyInput(which) => write!(f, "{which} token list is empty"),
            Self::DimensionMismatch { left, right } => {
                write!(f, "embedding dimensions differ: {left} vs {right}")
            }
            Self::ZeroVector(which) => write!(f, "{which} embedding is the zero vector"),
            Self::InvalidWeights(msg) => write!(f, "invalid n-gram weights: {msg}"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// Which length mismatch the brevity term punishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BrevityMode {
    /// Penalize decoded sentences longer than the original:
    /// `min(1 - len(decoded)/len(original), 0)` in log space.
    #[default]
    LongerOutput,
    /// Classical n-gram-overlap convention: penalize decoded sentences
    /// shorter than the original.
    Classical,
}

fn ngram_counts<T: Ord>(tokens: &[T], n: usize) -> BTreeMap<&[T], u64> {
    let mut counts = BTreeMap::new();
    if n <= tokens.len() {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision of order `n`: matched counts (clipped at the
/// original's counts) over the decoded sentence's total n-gram count.
/// Returns 0 when the decoded sentence has no n-grams of this order.
fn clipped_precision<T: Ord>(original: &[T], decoded: &[T], n: usize) -> f64 {
    let reference = ngram_counts(original, n);
    let candidate = ngram_counts(decoded, n);
    let mut matched = 0u64;
    let mut total = 0u64;
    for (gram, &count) in &candidate {
        matched += count.min(reference.get(gram).copied().unwrap_or(0));
        total += count;
    }
    if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    }
}

/// Geometric-mean n-gram overlap score with a one-sided length penalty.
///
/// The score is `exp(brevity + sum_n weights[n] * ln p_n)` with `p_n` the
/// clipped precision of order `n + 1`. Any zero precision makes the whole
/// score exactly 0 (no smoothing).
pub fn bleu<T: Ord>(
    original: &[T],
    decoded: &[T],
    order: usize,
    weights: &[f64],
) -> Result<f64, MetricsError> {
    bleu_with_mode(original, decoded, order, weights, BrevityMode::LongerOutput)
}

pub fn bleu_with_mode<T: Ord>(
    original: &[T],
    decoded: &[T],
    order: usize,
    weights: &[f64],
    mode: BrevityMode,
) -> Result<f64, MetricsError> {
    if original.is_empty() {
        return Err(MetricsError::EmptyInput("original"));
    }
    if decoded.is_empty() {
        return Err(MetricsError::EmptyInput("decoded"));
    }
    if order == 0 {
        return Err(MetricsError::InvalidWeights("order must be at least 1"));
    }
    if weights.len() != order {
        return Err(MetricsError::InvalidWeights("need one weight per n-gram order"));
    }
    if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
        return Err(MetricsError::InvalidWeights("weights must lie in [0, 1]"));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(MetricsError::InvalidWeights("weights must sum to 1"));
    }

    let original_len = original.len() as f64;
    let decoded_len = decoded.len() as f64;
    let brevity = match mode {
        BrevityMode::LongerOutput => (1.0 - decoded_len / original_len).min(0.0),
        BrevityMode::Classical => (1.0 - original_len / decoded_len).min(0.0),
    };

    let mut log_score = brevity;
    for (n, &weight) in (1..=order).zip(weights) {
        let precision = clipped_precision(original, decoded, n);
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_score += weight * precision.ln();
    }
    Ok(log_score.exp())
}

/// Cosine similarity between two sentence embeddings, clamped to [0, 1].
pub fn semantic_similarity(phi_x: &[f64], phi_xhat: &[f64]) -> Result<f64, MetricsError> {
    if phi_x.len() != phi_xhat.len() {
        return Err(MetricsError::DimensionMismatch { left: phi_x.len(), right: phi_xhat.len() });
    }
    let norm_sq_x = vecmath::norm_sq(phi_x);
    let norm_sq_xhat = vecmath::norm_sq(phi_xhat);
    if norm_sq_x == 0.0 {
        return Err(MetricsError::ZeroVector("original"));
    }
    if norm_sq_xhat == 0.0 {
        return Err(MetricsError::ZeroVector("decoded"));
    }
    if phi_x == phi_xhat {
        return Ok(1.0); // keep the identity case exact
    }
    Ok((vecmath::dot(phi_x, phi_xhat) / (norm_sq_x * norm_sq_xhat).sqrt()).clamp(0.0, 1.0))
}

fn token_counts<T: Ord>(tokens: &[T]) -> BTreeMap<&T, u64> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

fn clipped_match_count<T: Ord>(original: &[T], decoded: &[T]) -> u64 {
    let reference = token_counts(original);
    token_counts(decoded)
        .iter()
        .map(|(t, &c)| c.min(reference.get(*t).copied().unwrap_or(0)))
        .sum()
}

/// Token-level precision: the fraction of decoded tokens that also occur in
/// the original, with per-token counts clipped at the original's counts.
/// Order-independent.
pub fn semantic_accuracy<T: Ord>(original: &[T], decoded: &[T]) -> Result<f64, MetricsError> {
    if decoded.is_empty() {
        return Err(MetricsError::EmptyInput("decoded"));
    }
    Ok(clipped_match_count(original, decoded) as f64 / decoded.len() as f64)
}

/// Token-level recall: the fraction of original tokens recovered in the
/// decoded sentence, with the same clipped matching as the accuracy score.
pub fn semantic_completeness<T: Ord>(original: &[T], decoded: &[T]) -> Result<f64, MetricsError> {
    if original.is_empty() {
        return Err(MetricsError::EmptyInput("original"));
    }
    Ok(clipped_match_count(original, decoded) as f64 / original.len() as f64)
}

/// The four scores for one sentence, plus the n-gram configuration used.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub bleu: f64,
    pub similarity: f64,
    pub accuracy: f64,
    pub completeness: f64,
    pub ngram_order: usize,
    pub ngram_weights: Vec<f64>,
}

impl MetricsReport {
    /// The all-zero report used for an empty decoded sentence, where the
    /// precision-style scores are undefined and recall is zero.
    pub fn zeroed(order: usize, weights: &[f64]) -> Self {
        Self {
            bleu: 0.0,
            similarity: 0.0,
            accuracy: 0.0,
            completeness: 0.0,
            ngram_order: order,
            ngram_weights: weights.to_vec(),
        }
    }
}
