//! Bundled synthetic corpus: template sentences built from entity phrases,
//! relation phrases and filler words, 5 to 30 tokens each, with explicit
//! triples for most records and extractor-compatible patterns for the rest.
//! Deterministic for a fixed seed.

use semra_core::rng::CounterRng;

use crate::ingest::{build_corpus, Corpus, CorpusFile, SentenceRecord, TripleRecord};

const HEAD_NOUNS: &[&str] = &[
    "encoder", "decoder", "classifier", "transmitter", "receiver", "network", "model",
    "scheduler", "antenna", "codec", "detector", "estimator", "modulator", "channel", "pipeline",
    "beamformer",
];
const MODIFIERS: &[&str] = &[
    "deep", "neural", "adaptive", "robust", "sparse", "hybrid", "wireless", "semantic",
    "compact", "latent",
];
const TAIL_NOUNS: &[&str] = &[
    "dataset", "spectrum", "codebook", "corpus", "bandwidth", "embedding", "graph", "symbol",
    "feature", "payload", "carrier", "budget", "vocabulary", "lattice",
];
const RELATIONS: &[&str] =
    &["trained on", "used for", "part of", "related to", "based on", "mapped to"];
const FILLERS: &[&str] =
    &["the", "a", "is", "was", "been", "has", "this", "that", "and", "to", "of", "in", "with"];

// streams
const S_SHAPE: u64 = 0;
const S_WORD: u64 = 1;
const S_ALPHA: u64 = 2;

struct Builder {
    tokens: Vec<String>,
    alpha: Vec<f64>,
}

impl Builder {
    fn push(&mut self, word: &str, alpha: f64) {
        self.tokens.push(word.to_string());
        self.alpha.push(alpha);
    }
}

fn pick<'a>(rng: &CounterRng, stream: u64, counter: &mut u64, pool: &[&'a str]) -> &'a str {
    let idx = rng.below(stream, *counter, pool.len() as u64) as usize;
    *counter += 1;
    pool[idx]
}

fn uniform_in(rng: &CounterRng, stream: u64, counter: &mut u64, lo: f64, hi: f64) -> f64 {
    let u = rng.uniform(stream, *counter);
    *counter += 1;
    lo + (hi - lo) * u
}

/// One entity phrase: up to two modifiers plus a noun. Returns the span.
fn push_entity(
    builder: &mut Builder,
    rng: &CounterRng,
    word_counter: &mut u64,
    alpha_counter: &mut u64,
    nouns: &[&str],
) -> (usize, usize) {
    let start = builder.tokens.len();
    let modifiers = rng.below(S_SHAPE, *word_counter, 3);
    *word_counter += 1;
    for _ in 0..modifiers {
        let word = pick(rng, S_WORD, word_counter, MODIFIERS);
        let alpha = uniform_in(rng, S_ALPHA, alpha_counter, 0.5, 1.0);
        builder.push(word, alpha);
    }
    let noun = pick(rng, S_WORD, word_counter, nouns);
    let alpha = uniform_in(rng, S_ALPHA, alpha_counter, 0.5, 1.0);
    builder.push(noun, alpha);
    (start, builder.tokens.len())
}

fn push_fillers(
    builder: &mut Builder,
    rng: &CounterRng,
    word_counter: &mut u64,
    alpha_counter: &mut u64,
    count: u64,
) {
    for _ in 0..count {
        let word = pick(rng, S_WORD, word_counter, FILLERS);
        let alpha = uniform_in(rng, S_ALPHA, alpha_counter, 0.05, 0.6);
        builder.push(word, alpha);
    }
}

/// Generates the corpus file: `count` sentences of 5 to 30 tokens over a
/// shared relation catalog, embedding dimension 16.
pub fn synthetic_corpus_file(count: usize, seed: u64) -> CorpusFile {
    let rng = CounterRng::new(seed ^ 0x5e17_ab1e);
    let mut sentences = Vec::with_capacity(count);

    for index in 0..count {
        let mut word_counter = (index as u64) << 20;
        let mut alpha_counter = (index as u64) << 20;
        let mut builder = Builder { tokens: Vec::new(), alpha: Vec::new() };
        let mut triples = Vec::new();

        // up to two facts per sentence, separated by filler runs
        let facts = 1 + rng.below(S_SHAPE, (index as u64) << 2, 2);
        for _ in 0..facts {
            let lead = rng.below(S_SHAPE, word_counter, 4);
            push_fillers(&mut builder, &rng, &mut word_counter, &mut alpha_counter, lead);
            let head = push_entity(&mut builder, &rng, &mut word_counter, &mut alpha_counter, HEAD_NOUNS);
            // a filler between subject and predicate ("... is trained on ...")
            if rng.bits(S_SHAPE, word_counter) & 1 == 1 {
                push_fillers(&mut builder, &rng, &mut word_counter, &mut alpha_counter, 1);
            }
            let rel = pick(&rng, S_WORD, &mut word_counter, RELATIONS);
            for word in rel.split_whitespace() {
                let alpha = uniform_in(&rng, S_ALPHA, &mut alpha_counter, 0.5, 1.0);
                builder.push(word, alpha);
            }
            let tail = push_entity(&mut builder, &rng, &mut word_counter, &mut alpha_counter, TAIL_NOUNS);
            triples.push(TripleRecord { head, rel: rel.to_string(), tail });
            let trail = rng.below(S_SHAPE, word_counter, 3);
            push_fillers(&mut builder, &rng, &mut word_counter, &mut alpha_counter, trail);
        }
        builder.push(".", 0.05);

        // pad short sentences with leading fillers to reach five tokens
        while builder.tokens.len() < 5 {
            let word = pick(&rng, S_WORD, &mut word_counter, FILLERS);
            builder.tokens.insert(0, word.to_string());
            builder.alpha.insert(0, 0.1);
            for triple in &mut triples {
                triple.head = (triple.head.0 + 1, triple.head.1 + 1);
                triple.tail = (triple.tail.0 + 1, triple.tail.1 + 1);
            }
        }
        debug_assert!(builder.tokens.len() <= 30, "template overflow: {}", builder.tokens.len());

        // every fifth sentence omits explicit triples to exercise the
        // rule-based extractor on ingestion
        let triples = if index % 5 == 4 { None } else { Some(triples) };
        sentences.push(SentenceRecord {
            id: format!("synthetic-{index:04}"),
            tokens: builder.tokens,
            alpha: Some(builder.alpha),
            embeddings: None,
            beta: None,
            triples,
        });
    }

    CorpusFile {
        dim: 16,
        relations: RELATIONS.iter().map(|r| r.to_string()).collect(),
        sentences,
    }
}

/// The bundled corpus, assembled through the same path as file ingestion.
pub fn synthetic_corpus(count: usize, seed: u64) -> Corpus {
    let file = synthetic_corpus_file(count, seed);
    build_corpus(&file, seed).expect("the synthetic corpus must satisfy its own schema")
}
