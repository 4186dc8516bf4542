//! Representability and criticality losses, and the per-token cost that
//! prices a token's transmission.
//!
//! The selection objective trades the squared residual between the full
//! sentence embedding and the selected aggregate against the summed cost of
//! the selected tokens. Each token's cost combines its reconstruction error
//! with an inverse-SNR reliability penalty, weighted by the token's
//! criticality.

use crate::corpus::AnnotatedSentence;
use crate::vecmath;

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    DimensionMismatch { left: usize, right: usize },
    LengthMismatch { expected: usize, got: usize },
    NonPositiveSnr(f64),
}

impl core::fmt::Display for LossError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::DimensionMismatch { left, right } => {
                write!(f, "vector dimensions differ: {left} vs {right}")
            }
            Self::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} per-token values, got {got}")
            }
            Self::NonPositiveSnr(v) => write!(f, "SNR must be positive, got {v}"),
        }
    }
}

impl core::error::Error for LossError {}

/// Weights of the selection objective.
///
/// `ir_weight` scales the representability residual, `cost_weight` scales
/// the summed token costs, and `kappa` scales the inverse-SNR reliability
/// penalty inside each token cost.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostParams {
    pub ir_weight: f64,
    pub cost_weight: f64,
    pub kappa: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        // unit-scale defaults: the representability term dominates, costs
        // act as a mild regularizer
        Self { ir_weight: 1.0, cost_weight: 0.1, kappa: 1.0 }
    }
}

/// Information-representability loss: squared Euclidean distance between the
/// full sentence embedding and the aggregate of the selected subset.
pub fn loss_ir(phi_x: &[f64], psi_s: &[f64]) -> Result<f64, LossError> {
    if phi_x.len() != psi_s.len() {
        return Err(LossError::DimensionMismatch { left: phi_x.len(), right: psi_s.len() });
    }
    Ok(phi_x.iter().zip(psi_s).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Distortion-reliability cost of one token:
/// `beta * (recon_error + kappa / snr)`.
pub fn token_cost(
    recon_error: f64,
    snr: f64,
    beta: f64,
    kappa: f64,
) -> Result<f64, LossError> {
    if snr <= 0.0 || !snr.is_finite() {
        return Err(LossError::NonPositiveSnr(snr));
    }
    Ok(beta * (recon_error + kappa / snr))
}

/// Per-token costs for a whole sentence.
pub fn token_costs(sentence: &AnnotatedSentence, kappa: f64) -> alloc::vec::Vec<f64> {
    sentence
        .beta()
        .iter()
        .zip(sentence.recon_error())
        .zip(sentence.token_snr())
        .map(|((&beta, &err), &snr)| beta * (err + kappa / snr))
        .collect()
}

/// Distortion-criticality loss: the token costs summed over all tokens.
pub fn loss_dc(sentence: &AnnotatedSentence, kappa: f64) -> f64 {
    token_costs(sentence, kappa).iter().sum()
}

/// Selection objective:
/// `ir_weight * loss_ir + cost_weight * sum_i costs[i] * selection[i]`.
pub fn objective(
    phi_x: &[f64],
    psi_s: &[f64],
    costs: &[f64],
    selection: &[f64],
    params: &CostParams,
) -> Result<f64, LossError> {
    if costs.len() != selection.len() {
        return Err(LossError::LengthMismatch { expected: costs.len(), got: selection.len() });
    }
    let residual = loss_ir(phi_x, psi_s)?;
    Ok(params.ir_weight * residual + params.cost_weight * vecmath::dot(costs, selection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnnotatedSentence, Vocabulary};
    use alloc::vec;

    #[test]
    fn loss_ir_examples() {
        assert_eq!(loss_ir(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_ir(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(loss_ir(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 25.0);
        assert!(loss_ir(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn token_cost_examples() {
        assert_eq!(token_cost(0.0, 5.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(token_cost(0.5, 2.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(token_cost(0.25, 10.0, 2.0, 0.0).unwrap(), 0.5);
        assert!(token_cost(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(token_cost(0.0, -1.0, 1.0, 1.0).is_err());
    }

    fn sentence(beta: vec::Vec<f64>, err: vec::Vec<f64>, snr: vec::Vec<f64>) -> AnnotatedSentence {
        let n = beta.len();
        let mut vocab = Vocabulary::new();
        let tokens = (0..n).map(|i| vocab.intern(&alloc::format!("t{i}"))).collect();
        AnnotatedSentence::with_reliability(
            "s",
            tokens,
            vec![vec![1.0]; n],
            vec![1.0; n],
            beta,
            err,
            snr,
        )
        .unwrap()
    }

    #[test]
    fn loss_dc_sums_token_costs() {
        let s = sentence(vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]);
        assert_eq!(loss_dc(&s, 1.0), 0.0);

        // two tokens engineered to cost 1.0 and 0.5
        let s = sentence(vec![1.0, 1.0], vec![0.5, 0.0], vec![2.0, 2.0]);
        assert_eq!(loss_dc(&s, 1.0), 1.5);

        let s = sentence(vec![2.0], vec![0.25], vec![10.0]);
        assert_eq!(loss_dc(&s, 0.0), token_cost(0.25, 10.0, 2.0, 0.0).unwrap());
    }

    #[test]
    fn objective_examples() {
        let zero = CostParams { ir_weight: 0.0, cost_weight: 0.0, kappa: 0.0 };
        assert_eq!(objective(&[1.0], &[0.0], &[1.0], &[1.0], &zero).unwrap(), 0.0);

        let unit = CostParams { ir_weight: 1.0, cost_weight: 1.0, kappa: 1.0 };
        // empty selection leaves the full residual
        assert_eq!(
            objective(&[3.0, 4.0], &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], &unit).unwrap(),
            25.0
        );
        // perfect representation leaves only the cost term
        assert_eq!(objective(&[1.0, 0.0], &[1.0, 0.0], &[0.3], &[1.0], &unit).unwrap(), 0.3);
        assert!(objective(&[1.0], &[1.0], &[0.3, 0.4], &[1.0], &unit).is_err());
    }

    #[test]
    fn objective_monotone_in_selected_costs() {
        let params = CostParams::default();
        let lo = objective(&[1.0], &[0.5], &[0.2, 0.7], &[1.0, 0.0], &params).unwrap();
        let hi = objective(&[1.0], &[0.5], &[0.9, 0.7], &[1.0, 0.0], &params).unwrap();
        assert!(hi > lo);
    }
}
