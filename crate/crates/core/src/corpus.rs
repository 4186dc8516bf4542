//! Sentence, token-annotation and knowledge-graph data model.
//!
//! A sentence is an ordered list of vocabulary token ids with per-token
//! annotations: an embedding, an attention score in [0,1], a reconstruction
//! error, a linear SNR and a cost weight. Knowledge graphs hold
//! entity-relation-entity triples whose spans index into the sentence, and
//! drive both candidate grounding and the relation-distribution consistency
//! scores consumed by the selection solvers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;


#[allow(unused_imports)] // no_std float math; test builds link std and shadow the trait
use num_traits::Float;

use crate::rng::{hash_bytes, CounterRng};
use crate::vecmath;

/// Index into a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TokenId(pub u32);

/// Half-open token-index range `[start, end)` within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusError {
    /// A per-token annotation list disagrees with the token count.
    LengthMismatch { field: &'static str, expected: usize, got: usize },
    /// A value broke a range invariant (attention outside [0,1], SNR <= 0, ...).
    InvalidValue { field: &'static str, index: usize, value: f64 },
    /// Embedding dimensions differ within a sentence or across a corpus.
    DimensionMismatch { expected: usize, got: usize },
    /// Duplicate surface string offered to a vocabulary.
    DuplicateToken(String),
    /// A knowledge graph referenced data outside the sentence or catalog.
    InvalidGraph(String),
    /// Operation requires a nonempty relation catalog.
    EmptyCatalog,
}

impl core::fmt::Display for CorpusError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::LengthMismatch { field, expected, got } => {
                write!(f, "{field}: expected length {expected}, got {got}")
            }
            Self::InvalidValue { field, index, value } => {
                write!(f, "{field}[{index}] = {value} violates its range invariant")
            }
            Self::DimensionMismatch { expected, got } => {
                write!(f, "embedding dimension {got} != {expected}")
            }
            Self::DuplicateToken(t) => write!(f, "duplicate vocabulary token {t:?}"),
            Self::InvalidGraph(msg) => write!(f, "invalid knowledge graph: {msg}"),
            Self::EmptyCatalog => write!(f, "relation catalog is empty"),
        }
    }
}

impl core::error::Error for CorpusError {}

/// Ordered set of unique surface strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `surface`, adding it if unseen.
    pub fn intern(&mut self, surface: &str) -> TokenId {
        if let Some(&id) = self.index.get(surface) {
            return id;
        }
        let id = TokenId(self.tokens.len() as u32);
        self.tokens.push(surface.to_string());
        self.index.insert(surface.to_string(), id);
        id
    }

    /// Adds a new surface string, rejecting duplicates.
    pub fn push_unique(&mut self, surface: &str) -> Result<TokenId, CorpusError> {
        if self.index.contains_key(surface) {
            return Err(CorpusError::DuplicateToken(surface.to_string()));
        }
        Ok(self.intern(surface))
    }

    pub fn get(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.0 as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> &[String] {
        &self.tokens
    }
}

/// A sentence with validated per-token annotations.
///
/// All annotation lists have exactly one entry per token and the type is
/// immutable after construction; operations that change annotations (such as
/// the channel's distortion oracle) build a new sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    id: String,
    tokens: Vec<TokenId>,
    embeddings: Vec<Vec<f64>>,
    attention: Vec<f64>,
    recon_error: Vec<f64>,
    token_snr: Vec<f64>,
    beta: Vec<f64>,
}

impl AnnotatedSentence {
    /// Builds a sentence with neutral reliability data (no reconstruction
    /// error, unit SNR); the distortion oracle fills real values later.
    pub fn new(
        id: &str,
        tokens: Vec<TokenId>,
        embeddings: Vec<Vec<f64>>,
        attention: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self, CorpusError> {
        let n = tokens.len();
        Self::with_reliability(id, tokens, embeddings, attention, beta, vec![0.0; n], vec![1.0; n])
    }

    pub fn with_reliability(
        id: &str,
        tokens: Vec<TokenId>,
        embeddings: Vec<Vec<f64>>,
        attention: Vec<f64>,
        beta: Vec<f64>,
        recon_error: Vec<f64>,
        token_snr: Vec<f64>,
    ) -> Result<Self, CorpusError> {
        let n = tokens.len();
        if n == 0 {
            return Err(CorpusError::LengthMismatch { field: "tokens", expected: 1, got: 0 });
        }
        let check_len = |field: &'static str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(CorpusError::LengthMismatch { field, expected: n, got })
            }
        };
        check_len("embeddings", embeddings.len())?;
        check_len("attention", attention.len())?;
        check_len("beta", beta.len())?;
        check_len("recon_error", recon_error.len())?;
        check_len("token_snr", token_snr.len())?;

        let dim = embeddings[0].len();
        for emb in &embeddings {
            if emb.len() != dim {
                return Err(CorpusError::DimensionMismatch { expected: dim, got: emb.len() });
            }
            if let Some((i, &v)) = emb.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(CorpusError::InvalidValue { field: "embeddings", index: i, value: v });
            }
        }
        let check_range = |field: &'static str, values: &[f64], ok: fn(f64) -> bool| {
            match values.iter().enumerate().find(|(_, &v)| !ok(v)) {
                None => Ok(()),
                Some((i, &v)) => Err(CorpusError::InvalidValue { field, index: i, value: v }),
            }
        };
        check_range("attention", &attention, |v| (0.0..=1.0).contains(&v))?;
        check_range("beta", &beta, |v| v >= 0.0 && v.is_finite())?;
        check_range("recon_error", &recon_error, |v| v >= 0.0 && v.is_finite())?;
        check_range("token_snr", &token_snr, |v| v > 0.0 && v.is_finite())?;

        Ok(Self { id: id.to_string(), tokens, embeddings, attention, recon_error, token_snr, beta })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Token count.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty sentences
    }

    pub fn dim(&self) -> usize {
        self.embeddings[0].len()
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn embeddings(&self) -> &[Vec<f64>] {
        &self.embeddings
    }

    pub fn attention(&self) -> &[f64] {
        &self.attention
    }

    pub fn recon_error(&self) -> &[f64] {
        &self.recon_error
    }

    pub fn token_snr(&self) -> &[f64] {
        &self.token_snr
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

/// An entity: a token span plus its surface label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub span: Span,
    pub label: String,
}

/// One directed relation instance between two entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInstance {
    pub label: String,
    pub head: usize,
    pub tail: usize,
}

/// An (entity, relation, entity) fact extracted from a sentence.
///
/// The relation's surface phrase may or may not occur verbatim in the
/// sentence: triples found by the extractor carry the occurrence span,
/// while externally supplied triples usually do not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticTriple {
    pub head: Entity,
    pub relation_label: String,
    pub relation_span: Option<Span>,
    pub tail: Entity,
}

impl SemanticTriple {
    /// Tokens in the relation phrase (its word count).
    pub fn relation_token_count(&self) -> usize {
        match self.relation_span {
            Some(span) => span.len(),
            None => self.relation_label.split_whitespace().count(),
        }
    }

    /// Total number of tokens the triple occupies (head + relation + tail).
    pub fn token_count(&self) -> usize {
        self.head.span.len() + self.relation_token_count() + self.tail.span.len()
    }

    fn sentence_spans(&self) -> impl Iterator<Item = Span> {
        [Some(self.head.span), self.relation_span, Some(self.tail.span)].into_iter().flatten()
    }
}

/// Entities, directed relation instances and triples of one sentence, plus
/// the corpus-wide relation catalog.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    pub entities: Vec<Entity>,
    pub relations: Vec<RelationInstance>,
    pub triples: Vec<SemanticTriple>,
    pub catalog: Vec<String>,
}

impl KnowledgeGraph {
    pub fn empty(catalog: Vec<String>) -> Self {
        Self { entities: Vec::new(), relations: Vec::new(), triples: Vec::new(), catalog }
    }

    /// Checks the structural invariants against a sentence of `len` tokens.
    pub fn validate(&self, len: usize) -> Result<(), CorpusError> {
        for triple in &self.triples {
            if triple.head.span == triple.tail.span {
                return Err(CorpusError::InvalidGraph("head and tail spans coincide".into()));
            }
            for span in triple.sentence_spans() {
                if span.is_empty() || span.end > len {
                    return Err(CorpusError::InvalidGraph("span outside sentence".into()));
                }
            }
            if !self.catalog.iter().any(|c| *c == triple.relation_label) {
                return Err(CorpusError::InvalidGraph("relation label not in catalog".into()));
            }
        }
        Ok(())
    }
}

/// Total token count of the semantic information: the sum over triples of
/// head-span, relation-span and tail-span sizes.
pub fn semantic_token_count(kg: &KnowledgeGraph) -> usize {
    kg.triples.iter().map(SemanticTriple::token_count).sum()
}

/// Attention-weighted sentence embedding: the sum of each token's embedding
/// scaled by its attention score.
pub fn sentence_embedding(sentence: &AnnotatedSentence) -> Vec<f64> {
    vecmath::weighted_sum(sentence.embeddings(), sentence.attention())
}

/// Aggregated embedding of a (possibly fractional) selection: the sum of
/// each token's embedding scaled by its selection weight in [0, 1].
pub fn aggregate_selected(
    sentence: &AnnotatedSentence,
    weights: &[f64],
) -> Result<Vec<f64>, CorpusError> {
    if weights.len() != sentence.len() {
        return Err(CorpusError::LengthMismatch {
            field: "selection",
            expected: sentence.len(),
            got: weights.len(),
        });
    }
    Ok(vecmath::weighted_sum(sentence.embeddings(), weights))
}

/// Flags the tokens covered by any entity span or relation phrase.
pub fn kg_membership(kg: &KnowledgeGraph, len: usize) -> Vec<bool> {
    let mut member = vec![false; len];
    for triple in &kg.triples {
        for span in triple.sentence_spans() {
            for i in span.start..span.end.min(len) {
                member[i] = true;
            }
        }
    }
    member
}

/// Per-token candidate bounds: a token may be selected only when its
/// attention score reaches `tau_alpha` *and* it is anchored in the knowledge
/// graph (entity span or relation phrase).
///
/// Tokens with attention exactly at the threshold are included.
pub fn grounding_mask(
    sentence: &AnnotatedSentence,
    kg: &KnowledgeGraph,
    tau_alpha: f64,
) -> Vec<bool> {
    let member = kg_membership(kg, sentence.len());
    sentence
        .attention()
        .iter()
        .zip(member)
        .map(|(&alpha, grounded)| alpha >= tau_alpha && grounded)
        .collect()
}

/// Attention-only bounds, used when knowledge-graph absence is priced into
/// the token cost instead of excluding the token outright.
pub fn attention_mask(sentence: &AnnotatedSentence, tau_alpha: f64) -> Vec<bool> {
    sentence.attention().iter().map(|&alpha| alpha >= tau_alpha).collect()
}

/// Relative frequencies of relation labels with add-one smoothing, so every
/// catalog label carries strictly positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl RelationDistribution {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }
}

/// Add-one-smoothed distribution of relation labels over the full catalog.
pub fn relation_distribution(kg: &KnowledgeGraph) -> Result<RelationDistribution, CorpusError> {
    if kg.catalog.is_empty() {
        return Err(CorpusError::EmptyCatalog);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for rel in &kg.relations {
        *counts.entry(rel.label.as_str()).or_insert(0) += 1;
    }
    let total = kg.relations.len() + kg.catalog.len();
    let probs = kg
        .catalog
        .iter()
        .map(|label| (counts.get(label.as_str()).copied().unwrap_or(0) + 1) as f64 / total as f64)
        .collect();
    Ok(RelationDistribution { labels: kg.catalog.clone(), probs })
}

/// Keeps only the triples whose tokens all survive `keep`; entities and
/// relation instances are rebuilt from the survivors.
pub fn restrict_triples(kg: &KnowledgeGraph, keep: &[bool]) -> KnowledgeGraph {
    let surviving: Vec<SemanticTriple> = kg
        .triples
        .iter()
        .filter(|t| {
            t.sentence_spans()
                .all(|span| (span.start..span.end).all(|i| keep.get(i).copied().unwrap_or(false)))
        })
        .cloned()
        .collect();
    graph_from_triples(surviving, kg.catalog.clone())
}

/// Per-token knowledge-graph consistency scores.
///
/// For each token, the labels of the triples covering it select a conditional
/// slice of the source and destination relation distributions; the score is
/// the KL divergence between the two renormalized slices. Tokens covered by
/// no triple score zero. Smoothing keeps every divergence finite.
pub fn token_kl_divergences(
    len: usize,
    src: &KnowledgeGraph,
    dest: &KnowledgeGraph,
) -> Result<Vec<f64>, CorpusError> {
    if src.catalog != dest.catalog {
        return Err(CorpusError::InvalidGraph("source and destination catalogs differ".into()));
    }
    let p_src = relation_distribution(src)?;
    let p_dest = relation_distribution(dest)?;

    let mut incident: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); len];
    for triple in &src.triples {
        let label_idx = src
            .catalog
            .iter()
            .position(|c| *c == triple.relation_label)
            .ok_or_else(|| CorpusError::InvalidGraph("relation label not in catalog".into()))?;
        for span in triple.sentence_spans() {
            for i in span.start..span.end.min(len) {
                incident[i].insert(label_idx);
            }
        }
    }

    Ok(incident
        .iter()
        .map(|labels| {
            if labels.is_empty() {
                return 0.0;
            }
            let p_mass: f64 = labels.iter().map(|&l| p_src.probs[l]).sum();
            let q_mass: f64 = labels.iter().map(|&l| p_dest.probs[l]).sum();
            labels
                .iter()
                .map(|&l| {
                    let p = p_src.probs[l] / p_mass;
                    let q = p_dest.probs[l] / q_mass;
                    p * (p / q).ln()
                })
                .sum::<f64>()
                .max(0.0)
        })
        .collect())
}

/// Pattern rules for the toy triple extractor: relation phrases to search
/// for, stopwords that bound entity spans, and a cap on entity length.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub relation_phrases: Vec<String>,
    pub stopwords: BTreeSet<String>,
    pub max_entity_len: usize,
}

impl RuleSet {
    pub fn new(relation_phrases: Vec<String>, stopwords: &[&str], max_entity_len: usize) -> Self {
        Self {
            relation_phrases,
            stopwords: stopwords.iter().map(|s| s.to_string()).collect(),
            max_entity_len,
        }
    }

    /// English function words plus sentence punctuation; enough for the
    /// synthetic corpora used in tests and experiments.
    pub fn default_stopwords() -> &'static [&'static str] {
        &[
            "a", "an", "the", "is", "are", "was", "were", "be", "been", "being", "has", "have",
            "had", "will", "would", "can", "could", "it", "its", "this", "that", "these", "those",
            "and", "or", "but", "to", "of", "in", "by", "with", "from", "at", "as", "into", ".",
            ",", ";", ":", "!", "?",
        ]
    }

    fn is_stop(&self, surface: &str) -> bool {
        self.stopwords.contains(surface)
    }
}

fn graph_from_triples(triples: Vec<SemanticTriple>, catalog: Vec<String>) -> KnowledgeGraph {
    let mut entities: Vec<Entity> = Vec::new();
    let mut relations = Vec::new();
    for triple in &triples {
        let mut entity_index = |e: &Entity| -> usize {
            if let Some(i) = entities.iter().position(|x| x.span == e.span) {
                i
            } else {
                entities.push(e.clone());
                entities.len() - 1
            }
        };
        let head = entity_index(&triple.head);
        let tail = entity_index(&triple.tail);
        relations.push(RelationInstance { label: triple.relation_label.clone(), head, tail });
    }
    KnowledgeGraph { entities, relations, triples, catalog }
}

/// Rule-based triple extraction: finds each relation phrase in the sentence
/// and grows a head entity leftwards and a tail entity rightwards, skipping
/// stopwords and stopping at span boundaries.
///
/// Overlapping candidates are resolved by preferring the triple with the
/// larger total span, then the earlier start. A sentence with no match
/// yields an empty graph.
pub fn toy_extract_triples(
    sentence: &AnnotatedSentence,
    vocab: &Vocabulary,
    rules: &RuleSet,
) -> KnowledgeGraph {
    let surfaces: Vec<&str> =
        sentence.tokens().iter().map(|&id| vocab.surface(id).unwrap_or("")).collect();
    let n = surfaces.len();

    // positions covered by any relation-phrase occurrence bound entities
    let mut relation_mask = vec![false; n];
    for phrase in &rules.relation_phrases {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        if words.is_empty() || words.len() > n {
            continue;
        }
        for start in 0..=(n - words.len()) {
            if surfaces[start..start + words.len()] == words[..] {
                for flag in &mut relation_mask[start..start + words.len()] {
                    *flag = true;
                }
            }
        }
    }

    let mut candidates: Vec<SemanticTriple> = Vec::new();
    for phrase in &rules.relation_phrases {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        if words.is_empty() || words.len() > n {
            continue;
        }
        for start in 0..=(n - words.len()) {
            if surfaces[start..start + words.len()] != words[..] {
                continue;
            }
            let rel_span = Span::new(start, start + words.len());
            let head = grow_entity_left(&surfaces, rules, &relation_mask, start);
            let tail = grow_entity_right(&surfaces, rules, &relation_mask, rel_span.end);
            if let (Some(head), Some(tail)) = (head, tail) {
                if head != tail {
                    candidates.push(SemanticTriple {
                        head: make_entity(&surfaces, head),
                        relation_label: phrase.clone(),
                        relation_span: Some(rel_span),
                        tail: make_entity(&surfaces, tail),
                    });
                }
            }
        }
    }

    // Longer total span wins a conflict; earlier start breaks ties.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| {
        (core::cmp::Reverse(candidates[i].token_count()), candidates[i].head.span.start)
    });
    let mut occupied = vec![false; n];
    let mut kept = Vec::new();
    for i in order {
        let triple = &candidates[i];
        let free =
            triple.sentence_spans().all(|s| (s.start..s.end).all(|p| !occupied[p]));
        if free {
            for s in triple.sentence_spans() {
                for p in s.start..s.end {
                    occupied[p] = true;
                }
            }
            kept.push(i);
        }
    }
    kept.sort_unstable(); // restore sentence order
    let triples = kept.into_iter().map(|i| candidates[i].clone()).collect();
    graph_from_triples(triples, rules.relation_phrases.clone())
}

fn make_entity(surfaces: &[&str], span: Span) -> Entity {
    let mut label = String::new();
    for (k, s) in surfaces[span.start..span.end].iter().enumerate() {
        if k > 0 {
            label.push(' ');
        }
        label.push_str(s);
    }
    Entity { span, label }
}

/// Walks left from `rel_start`, skipping stopwords, then collects a run of
/// content tokens up to the configured entity length. Relation-phrase
/// positions bound the run.
fn grow_entity_left(
    surfaces: &[&str],
    rules: &RuleSet,
    relation_mask: &[bool],
    rel_start: usize,
) -> Option<Span> {
    let mut i = rel_start;
    while i > 0 && rules.is_stop(surfaces[i - 1]) && !relation_mask[i - 1] {
        i -= 1;
    }
    let end = i;
    while i > 0
        && !rules.is_stop(surfaces[i - 1])
        && !relation_mask[i - 1]
        && end - (i - 1) <= rules.max_entity_len
    {
        i -= 1;
    }
    (i < end).then(|| Span::new(i, end))
}

fn grow_entity_right(
    surfaces: &[&str],
    rules: &RuleSet,
    relation_mask: &[bool],
    rel_end: usize,
) -> Option<Span> {
    let n = surfaces.len();
    let mut i = rel_end;
    while i < n && rules.is_stop(surfaces[i]) && !relation_mask[i] {
        i += 1;
    }
    let start = i;
    while i < n
        && !rules.is_stop(surfaces[i])
        && !relation_mask[i]
        && (i + 1) - start <= rules.max_entity_len
    {
        i += 1;
    }
    (i > start).then(|| Span::new(start, i))
}

/// Deterministic fallback embedding: a unit vector derived from the surface
/// string's hash. Intended for tests and synthetic corpora, not production
/// corpora, which should ship real embeddings.
pub fn stub_embedding(surface: &str, dim: usize, seed: u64) -> Vec<f64> {
    let rng = CounterRng::new(seed);
    let stream = hash_bytes(surface.as_bytes());
    let mut v = Vec::with_capacity(dim);
    let mut k = 0;
    while v.len() < dim {
        let (z1, z2) = rng.normal_pair(stream, k);
        v.push(z1);
        if v.len() < dim {
            v.push(z2);
        }
        k += 1;
    }
    let norm = vecmath::norm_sq(&v).sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    } else {
        v[0] = 1.0; // astronomically unlikely, but keep the unit-norm contract
    }
    v
}
