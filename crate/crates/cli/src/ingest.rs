//! Corpus loading: the JSON document schema, validation with record-level
//! error context, and assembly into the core data model.
//!
//! Schema (one JSON document):
//!
//! ```json
//! {
//!   "dim": 4,
//!   "relations": ["trained on", "used for"],
//!   "sentences": [
//!     {
//!       "id": "s1",
//!       "tokens": ["DNN", "is", "trained", "on", "large", "dataset", "."],
//!       "alpha": [0.9, 0.1, 0.8, 0.8, 0.7, 0.9, 0.05],
//!       "embeddings": [[...], ...],
//!       "beta": [1, 1, 1, 1, 1, 1, 1],
//!       "triples": [ {"head": [0, 1], "rel": "trained on", "tail": [4, 6]} ]
//!     }
//!   ]
//! }
//! ```
//!
//! Missing `alpha` defaults to uniform `1/N`; missing `embeddings` fall back
//! to deterministic stub vectors; missing `triples` runs the rule-based
//! extractor over the relation catalog.

use std::path::Path;

use serde::{Deserialize, Serialize};

use semra_core::corpus::{
    stub_embedding, toy_extract_triples, AnnotatedSentence, Entity, KnowledgeGraph,
    RelationInstance, RuleSet, SemanticTriple, Span, TokenId, Vocabulary,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read corpus {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("sentence {id:?}: {message}")]
    Sentence { id: String, message: String },
    #[error("corpus: {0}")]
    Corpus(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleRecord {
    pub head: (usize, usize),
    pub rel: String,
    pub tail: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<Vec<TripleRecord>>,
}

/// The corpus file as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusFile {
    pub dim: usize,
    pub relations: Vec<String>,
    pub sentences: Vec<SentenceRecord>,
}

/// A loaded corpus: shared vocabulary, relation catalog and one annotated
/// sentence plus knowledge graph per record.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub catalog: Vec<String>,
    pub sentences: Vec<(AnnotatedSentence, KnowledgeGraph)>,
}

pub fn ingest_corpus(path: &Path, stub_seed: u64) -> Result<Corpus, IngestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    let file: CorpusFile = serde_json::from_str(&text)?;
    build_corpus(&file, stub_seed)
}

/// Assembles and validates a corpus from its file representation.
pub fn build_corpus(file: &CorpusFile, stub_seed: u64) -> Result<Corpus, IngestError> {
    if file.dim == 0 {
        return Err(IngestError::Corpus("dim must be at least 1".into()));
    }
    let rules = RuleSet::new(file.relations.clone(), RuleSet::default_stopwords(), 3);
    let mut vocab = Vocabulary::new();
    let mut sentences = Vec::with_capacity(file.sentences.len());

    for record in &file.sentences {
        let fail = |message: String| IngestError::Sentence { id: record.id.clone(), message };
        let n = record.tokens.len();
        if n == 0 {
            return Err(fail("sentence has no tokens".into()));
        }

        let tokens: Vec<TokenId> = record.tokens.iter().map(|t| vocab.intern(t)).collect();
        let alpha = match &record.alpha {
            Some(a) => a.clone(),
            None => vec![1.0 / n as f64; n],
        };
        let beta = record.beta.clone().unwrap_or_else(|| vec![1.0; n]);
        let embeddings = match &record.embeddings {
            Some(e) => {
                for (i, row) in e.iter().enumerate() {
                    if row.len() != file.dim {
                        return Err(fail(format!(
                            "embedding {i} has dimension {}, corpus dim is {}",
                            row.len(),
                            file.dim
                        )));
                    }
                }
                e.clone()
            }
            None => record
                .tokens
                .iter()
                .map(|t| stub_embedding(t, file.dim, stub_seed))
                .collect(),
        };

        let sentence =
            AnnotatedSentence::new(&record.id, tokens, embeddings, alpha, beta)
                .map_err(|e| fail(e.to_string()))?;

        let kg = match &record.triples {
            Some(records) => {
                explicit_graph(records, &record.tokens, &file.relations)
                    .map_err(|m| fail(m))?
            }
            None => toy_extract_triples(&sentence, &vocab, &rules),
        };
        kg.validate(n).map_err(|e| fail(e.to_string()))?;

        sentences.push((sentence, kg));
    }

    Ok(Corpus { vocab, dim: file.dim, catalog: file.relations.clone(), sentences })
}

fn explicit_graph(
    records: &[TripleRecord],
    surfaces: &[String],
    catalog: &[String],
) -> Result<KnowledgeGraph, String> {
    let n = surfaces.len();
    let mut entities: Vec<Entity> = Vec::new();
    let mut relations = Vec::new();
    let mut triples = Vec::new();

    for (idx, record) in records.iter().enumerate() {
        let span_of = |(start, end): (usize, usize), what: &str| -> Result<Span, String> {
            if start >= end || end > n {
                return Err(format!(
                    "triple {idx}: {what} span [{start}, {end}) outside sentence of {n} tokens"
                ));
            }
            Ok(Span::new(start, end))
        };
        let head_span = span_of(record.head, "head")?;
        let tail_span = span_of(record.tail, "tail")?;
        if head_span == tail_span {
            return Err(format!("triple {idx}: head and tail spans coincide"));
        }
        if !catalog.iter().any(|c| c == &record.rel) {
            return Err(format!("triple {idx}: relation {:?} not in catalog", record.rel));
        }

        let label_of = |span: Span| surfaces[span.start..span.end].join(" ");
        let head = Entity { span: head_span, label: label_of(head_span) };
        let tail = Entity { span: tail_span, label: label_of(tail_span) };

        let mut entity_index = |e: &Entity| -> usize {
            if let Some(i) = entities.iter().position(|x| x.span == e.span) {
                i
            } else {
                entities.push(e.clone());
                entities.len() - 1
            }
        };
        let head_idx = entity_index(&head);
        let tail_idx = entity_index(&tail);
        relations.push(RelationInstance {
            label: record.rel.clone(),
            head: head_idx,
            tail: tail_idx,
        });
        triples.push(SemanticTriple {
            head,
            relation_label: record.rel.clone(),
            relation_span: find_phrase(surfaces, &record.rel),
            tail,
        });
    }

    Ok(KnowledgeGraph { entities, relations, triples, catalog: catalog.to_vec() })
}

/// Locates a relation phrase's first occurrence in the sentence, if any.
fn find_phrase(surfaces: &[String], phrase: &str) -> Option<Span> {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    if words.is_empty() || words.len() > surfaces.len() {
        return None;
    }
    (0..=surfaces.len() - words.len())
        .find(|&start| {
            surfaces[start..start + words.len()].iter().map(String::as_str).eq(words.iter().copied())
        })
        .map(|start| Span::new(start, start + words.len()))
}
