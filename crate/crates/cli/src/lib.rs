//! Experiment drivers and file formats around the selection core: corpus
//! ingestion, the synthetic corpus, the per-sentence pipeline, sweep and
//! histogram drivers, and the verification suite.

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod sweep;
pub mod synth;
pub mod verify;

use std::path::Path;

use config::RunConfig;
use ingest::{ingest_corpus, Corpus, IngestError};

/// Loads the configured corpus: a file when a path is set, otherwise the
/// bundled synthetic corpus.
pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus, IngestError> {
    match &cfg.corpus.path {
        Some(path) => ingest_corpus(Path::new(path), cfg.corpus.stub_seed),
        None => {
            Ok(synth::synthetic_corpus(cfg.corpus.synthetic_sentences, cfg.corpus.synthetic_seed))
        }
    }
}
