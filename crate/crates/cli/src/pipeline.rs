//! End-to-end processing of one sentence: reliability annotation, candidate
//! grounding, instance assembly, selection, transmission and scoring.

use semra_core::channel::{
    normalize_codebook, oracle_annotate_with, transmit, ChannelConfig, ChannelError,
    FadingDistortionOracle, TransmissionResult,
};
use semra_core::corpus::{
    attention_mask, grounding_mask, kg_membership, restrict_triples, sentence_embedding,
    token_kl_divergences, AnnotatedSentence, CorpusError, KnowledgeGraph, TokenId,
};
use semra_core::losses::token_costs;
use semra_core::metrics::{
    bleu_with_mode, semantic_accuracy, semantic_completeness, semantic_similarity, MetricsError,
    MetricsReport,
};
use semra_core::optimizer::{
    brute_force, dual_ascent_with, greedy_select, primal_dual_kkt_with, ConstraintParams,
    OptError, ProblemInstance, SolveReport, SolverOptions, BRUTE_FORCE_LIMIT,
};

use crate::config::{GroundingMode, RunConfig, Solver};
use crate::ingest::Corpus;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("solver: {0}")]
    Solver(#[from] OptError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("sentence {id:?} has {tokens} tokens: exhaustive search is limited to {limit}")]
    SentenceTooLargeForBrute { id: String, tokens: usize, limit: usize },
}

/// Outcome of one sentence run.
#[derive(Debug, Clone)]
pub struct SentenceOutcome {
    pub decoded: Vec<TokenId>,
    pub metrics: MetricsReport,
    pub solve: SolveReport,
    pub transmission: Option<TransmissionResult>,
    /// Fraction of tokens selected for transmission.
    pub compression_ratio: f64,
}

/// Per-corpus transmission state shared across sentences: the normalized
/// vocabulary codebook and the raw embedding of each vocabulary token.
pub struct CodebookSet {
    pub normalized: Vec<Vec<f64>>,
    pub raw: Vec<Vec<f64>>,
}

/// Builds the vocabulary codebook from first-occurrence embeddings.
pub fn build_codebook(corpus: &Corpus) -> Result<CodebookSet, PipelineError> {
    let mut raw: Vec<Option<Vec<f64>>> = vec![None; corpus.vocab.len()];
    for (sentence, _) in &corpus.sentences {
        for (&token, embedding) in sentence.tokens().iter().zip(sentence.embeddings()) {
            let slot = &mut raw[token.0 as usize];
            if slot.is_none() {
                *slot = Some(embedding.clone());
            }
        }
    }
    let raw: Vec<Vec<f64>> =
        raw.into_iter().map(|r| r.unwrap_or_else(|| vec![0.0; corpus.dim])).collect();
    let normalized = normalize_codebook(&raw)?;
    Ok(CodebookSet { normalized, raw })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Assembles the selection problem for one annotated sentence.
pub fn build_instance(
    annotated: &AnnotatedSentence,
    kg: &KnowledgeGraph,
    cfg: &RunConfig,
    max_tokens: usize,
) -> Result<ProblemInstance, PipelineError> {
    let n = annotated.len();

    // candidate bounds and costs, depending on the grounding mode
    let membership = kg_membership(kg, n);
    let bounds = match cfg.selection.grounding {
        GroundingMode::Hard => grounding_mask(annotated, kg, cfg.constraints.min_attention),
        GroundingMode::Soft => attention_mask(annotated, cfg.constraints.min_attention),
    };
    let mut costs = token_costs(annotated, cfg.weights.kappa);
    if cfg.selection.grounding == GroundingMode::Soft {
        for (cost, &grounded) in costs.iter_mut().zip(&membership) {
            if !grounded {
                *cost *= cfg.selection.soft_cost_multiplier;
            }
        }
    }

    // destination graph: triples fully covered by tokens that could survive
    // the per-token thresholds
    let kl = if kg.catalog.is_empty() {
        vec![0.0; n]
    } else {
        let survivable: Vec<bool> = (0..n)
            .map(|i| {
                bounds[i]
                    && annotated.recon_error()[i] <= cfg.constraints.max_recon_error
                    && annotated.token_snr()[i] >= cfg.constraints.min_snr
            })
            .collect();
        let dest = restrict_triples(kg, &survivable);
        token_kl_divergences(n, kg, &dest)?
    };

    let embeddings = annotated.embeddings().to_vec();
    let pair_similarity: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { cosine(&embeddings[i], &embeddings[j]) })
                .collect()
        })
        .collect();

    let instance = ProblemInstance {
        target: sentence_embedding(annotated),
        embeddings,
        costs,
        attention: annotated.attention().to_vec(),
        recon_error: annotated.recon_error().to_vec(),
        snr: annotated.token_snr().to_vec(),
        kl,
        pair_similarity,
        bounds,
        constraints: ConstraintParams {
            max_tokens,
            min_attention: cfg.constraints.min_attention,
            max_recon_error: cfg.constraints.max_recon_error,
            max_kl: cfg.constraints.max_kl,
            max_pair_similarity: cfg.constraints.max_pair_similarity,
            min_snr: cfg.constraints.min_snr,
            pair_slack: None,
        },
        weights: cfg.weights.cost_params(),
    };
    instance.validate()?;
    Ok(instance)
}

pub fn solve(
    instance: &ProblemInstance,
    solver: Solver,
    trace: bool,
    sentence_id: &str,
) -> Result<SolveReport, PipelineError> {
    let options = SolverOptions { trace, trace_multipliers: trace };
    match solver {
        Solver::Greedy => Ok(greedy_select(instance)?),
        Solver::DualAscent => Ok(dual_ascent_with(instance, &options)?),
        Solver::Kkt => Ok(primal_dual_kkt_with(instance, &options)?),
        Solver::Brute => {
            if instance.n() > BRUTE_FORCE_LIMIT {
                return Err(PipelineError::SentenceTooLargeForBrute {
                    id: sentence_id.to_string(),
                    tokens: instance.n(),
                    limit: BRUTE_FORCE_LIMIT,
                });
            }
            Ok(brute_force(instance)?)
        }
    }
}

/// Runs the full path for one sentence at one channel configuration:
/// annotate reliability, ground candidates, solve the selection problem,
/// transmit the selected tokens, reassemble the decoded sentence in original
/// order and score it against the original.
pub fn run_sentence(
    sentence: &AnnotatedSentence,
    kg: &KnowledgeGraph,
    cfg: &RunConfig,
    codebooks: &CodebookSet,
    channel: &ChannelConfig,
    max_tokens_override: Option<usize>,
) -> Result<SentenceOutcome, PipelineError> {
    let n = sentence.len();
    let oracle = FadingDistortionOracle::with_base_err(*channel, cfg.channel.base_err);
    let annotated = oracle_annotate_with(sentence, &oracle)?;

    let max_tokens =
        max_tokens_override.or(cfg.constraints.max_tokens).unwrap_or(n).min(n);
    let instance = build_instance(&annotated, kg, cfg, max_tokens)?;
    let solve_report = solve(&instance, cfg.selection.solver, cfg.output.trace, sentence.id())?;

    let selected = solve_report.selection.indices();
    let compression_ratio = selected.len() as f64 / n as f64;

    let order = cfg.metrics.ngram_order;
    let weights = cfg.metrics.weights();

    if selected.is_empty() {
        // nothing transmitted: every score is zero
        return Ok(SentenceOutcome {
            decoded: Vec::new(),
            metrics: MetricsReport::zeroed(order, &weights),
            solve: solve_report,
            transmission: None,
            compression_ratio,
        });
    }

    // transmit the normalized codebook rows of the selected tokens
    let payload: Vec<Vec<f64>> = selected
        .iter()
        .map(|&i| codebooks.normalized[sentence.tokens()[i].0 as usize].clone())
        .collect();
    let transmission = transmit(&payload, &codebooks.normalized, channel)?;
    let decoded: Vec<TokenId> = transmission.received.clone();

    // scoring: original ids against decoded ids, and the attention-weighted
    // embedding of the original against the decoded tokens' embeddings at
    // the surviving positions
    let original = sentence.tokens();
    let overlap = bleu_with_mode(original, &decoded, order, &weights, cfg.metrics.brevity)?;
    let accuracy = semantic_accuracy(original, &decoded)?;
    let completeness = semantic_completeness(original, &decoded)?;

    let phi_original = sentence_embedding(&annotated);
    let mut decoded_weights = vec![0.0; n];
    let mut decoded_sentence_embeddings = annotated.embeddings().to_vec();
    for (&position, &received) in selected.iter().zip(&decoded) {
        decoded_weights[position] = annotated.attention()[position];
        decoded_sentence_embeddings[position] = codebooks.raw[received.0 as usize].clone();
    }
    let phi_decoded = {
        let mut sum = vec![0.0; annotated.dim()];
        for (weight, embedding) in decoded_weights.iter().zip(&decoded_sentence_embeddings) {
            for (slot, value) in sum.iter_mut().zip(embedding) {
                *slot += weight * value;
            }
        }
        sum
    };
    let similarity = match semantic_similarity(&phi_original, &phi_decoded) {
        Ok(value) => value,
        Err(MetricsError::ZeroVector(_)) => 0.0,
        Err(other) => return Err(other.into()),
    };

    Ok(SentenceOutcome {
        decoded,
        metrics: MetricsReport {
            bleu: overlap,
            similarity,
            accuracy,
            completeness,
            ngram_order: order,
            ngram_weights: weights,
        },
        solve: solve_report,
        transmission: Some(transmission),
        compression_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::synth::synthetic_corpus;
    use semra_core::channel::ChannelModel;

    fn noiseless() -> ChannelConfig {
        ChannelConfig { model: ChannelModel::Awgn, snr_db: 300.0, seed: 0, block_len: 8 }
    }

    #[test]
    fn lossless_path_recovers_every_metric() {
        // unit attention over orthogonal embeddings makes the target the
        // plain column sum, so every greedy gain stays positive and the
        // full selection is the unconstrained optimum
        let orthogonal: Vec<Vec<f64>> =
            (0..6).map(|i| (0..6).map(|d| f64::from(u8::from(d == i))).collect()).collect();
        let file = crate::ingest::CorpusFile {
            dim: 6,
            relations: vec!["used for".into()],
            sentences: vec![crate::ingest::SentenceRecord {
                id: "lossless".into(),
                tokens: ["codec", "used", "for", "payload", "compression", "today"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                alpha: Some(vec![1.0; 6]),
                embeddings: Some(orthogonal),
                beta: None,
                triples: None,
            }],
        };
        let corpus = crate::ingest::build_corpus(&file, 0).unwrap();
        let codebooks = build_codebook(&corpus).unwrap();
        let mut cfg = RunConfig::default();
        // no budget, no thresholds, zero costs
        cfg.constraints.min_attention = 0.0;
        cfg.constraints.max_pair_similarity = 1.0;
        cfg.constraints.min_snr = 1e-9;
        cfg.weights.cost_weight = 0.0;
        cfg.selection.grounding = GroundingMode::Soft;
        let (sentence, kg) = &corpus.sentences[0];
        let outcome =
            run_sentence(sentence, kg, &cfg, &codebooks, &noiseless(), None).unwrap();
        assert_eq!(outcome.decoded, sentence.tokens());
        assert_eq!(outcome.metrics.accuracy, 1.0);
        assert_eq!(outcome.metrics.completeness, 1.0);
        assert!((outcome.metrics.bleu - 1.0).abs() < 1e-9);
        assert_eq!(outcome.metrics.similarity, 1.0);
        assert_eq!(outcome.compression_ratio, 1.0);
    }

    #[test]
    fn zero_budget_scores_zero() {
        let corpus = synthetic_corpus(3, 5);
        let codebooks = build_codebook(&corpus).unwrap();
        let mut cfg = RunConfig::default();
        cfg.constraints.max_tokens = Some(0);
        let (sentence, kg) = &corpus.sentences[0];
        let outcome =
            run_sentence(sentence, kg, &cfg, &codebooks, &noiseless(), None).unwrap();
        assert!(outcome.decoded.is_empty());
        assert_eq!(outcome.metrics.completeness, 0.0);
        assert_eq!(outcome.metrics.accuracy, 0.0);
        assert_eq!(outcome.compression_ratio, 0.0);
    }

    #[test]
    fn decoded_never_longer_than_original() {
        let corpus = synthetic_corpus(20, 9);
        let codebooks = build_codebook(&corpus).unwrap();
        let cfg = RunConfig::default();
        let channel = ChannelConfig { snr_db: 5.0, ..noiseless() };
        for (sentence, kg) in &corpus.sentences {
            let outcome =
                run_sentence(sentence, kg, &cfg, &codebooks, &channel, None).unwrap();
            assert!(outcome.decoded.len() <= sentence.len());
        }
    }

    #[test]
    fn brute_solver_rejects_long_sentences() {
        let corpus = synthetic_corpus(60, 13);
        let long = corpus
            .sentences
            .iter()
            .find(|(s, _)| s.len() > 22)
            .expect("the corpus should contain a long sentence");
        let codebooks = build_codebook(&corpus).unwrap();
        let mut cfg = RunConfig::default();
        cfg.selection.solver = Solver::Brute;
        let err = run_sentence(&long.0, &long.1, &cfg, &codebooks, &noiseless(), None);
        assert!(matches!(err, Err(PipelineError::SentenceTooLargeForBrute { .. })));
    }
}
