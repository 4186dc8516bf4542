//! Run configuration: file format (TOML or JSON) plus command-line
//! overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semra_core::channel::{ChannelConfig, ChannelModel};
use semra_core::losses::CostParams;
use semra_core::metrics::BrevityMode;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Greedy,
    DualAscent,
    Kkt,
    Brute,
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Self::Greedy),
            "dual_ascent" => Ok(Self::DualAscent),
            "kkt" => Ok(Self::Kkt),
            "brute" => Ok(Self::Brute),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingMode {
    /// Knowledge-graph absence excludes a token outright.
    Hard,
    /// Knowledge-graph absence multiplies the token's cost instead.
    Soft,
}

fn default_base_err() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSection {
    /// Corpus JSON path; absent means the bundled synthetic corpus.
    pub path: Option<PathBuf>,
    /// Seed for fallback embeddings of corpora that ship none.
    pub stub_seed: u64,
    /// Sentence count of the bundled synthetic corpus.
    pub synthetic_sentences: usize,
    /// Seed of the bundled synthetic corpus.
    pub synthetic_seed: u64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self { path: None, stub_seed: 0, synthetic_sentences: 500, synthetic_seed: 2024 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSection {
    pub model: ChannelModel,
    pub snr_db: f64,
    pub seed: u64,
    pub block_len: usize,
    /// Scale of the distortion oracle's reconstruction error.
    #[serde(default = "default_base_err")]
    pub base_err: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self { model: ChannelModel::Rayleigh, snr_db: 10.0, seed: 0, block_len: 8, base_err: 1.0 }
    }
}

impl ChannelSection {
    pub fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            model: self.model,
            snr_db: self.snr_db,
            seed: self.seed,
            block_len: self.block_len,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintSection {
    /// Bandwidth budget; absent means each sentence's own length.
    pub max_tokens: Option<usize>,
    pub min_attention: f64,
    pub max_recon_error: f64,
    pub max_kl: f64,
    pub max_pair_similarity: f64,
    /// Minimum linear SNR per token.
    pub min_snr: f64,
}

impl Default for ConstraintSection {
    fn default() -> Self {
        Self {
            max_tokens: None,
            min_attention: 0.0,
            max_recon_error: 1.0,
            max_kl: 1.0,
            max_pair_similarity: 0.98,
            min_snr: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightSection {
    pub ir_weight: f64,
    pub cost_weight: f64,
    pub kappa: f64,
}

impl Default for WeightSection {
    fn default() -> Self {
        let d = CostParams::default();
        Self { ir_weight: d.ir_weight, cost_weight: d.cost_weight, kappa: d.kappa }
    }
}

impl WeightSection {
    pub fn cost_params(&self) -> CostParams {
        CostParams {
            ir_weight: self.ir_weight,
            cost_weight: self.cost_weight,
            kappa: self.kappa,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionSection {
    pub solver: Solver,
    pub grounding: GroundingMode,
    /// Cost multiplier for tokens outside the knowledge graph under soft
    /// grounding.
    pub soft_cost_multiplier: f64,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self { solver: Solver::Greedy, grounding: GroundingMode::Hard, soft_cost_multiplier: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    pub ngram_order: usize,
    /// Per-order weights; absent means uniform.
    pub ngram_weights: Option<Vec<f64>>,
    pub brevity: BrevityMode,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { ngram_order: 4, ngram_weights: None, brevity: BrevityMode::LongerOutput }
    }
}

impl MetricsSection {
    pub fn weights(&self) -> Vec<f64> {
        self.ngram_weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.ngram_order as f64; self.ngram_order])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub snrs_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub retransmit: bool,
    /// A sentence retransmits once when its accuracy or completeness falls
    /// below this floor.
    pub retransmit_floor: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snrs_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            seeds: vec![0, 1, 2],
            retransmit: false,
            retransmit_floor: 0.9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    /// Also write solve reports (with multiplier trajectories) as JSON.
    pub trace: bool,
}

/// Full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    pub channel: ChannelSection,
    pub constraints: ConstraintSection,
    pub weights: WeightSection,
    pub selection: SelectionSection,
    pub metrics: MetricsSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let config: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.snrs_db.is_empty() {
            return Err(ConfigError::Invalid("sweep.snrs_db must not be empty".into()));
        }
        if self.sweep.seeds.is_empty() {
            return Err(ConfigError::Invalid("sweep.seeds must not be empty".into()));
        }
        if self.constraints.min_snr <= 0.0 {
            return Err(ConfigError::Invalid("constraints.min_snr must be positive".into()));
        }
        if self.metrics.ngram_order == 0 {
            return Err(ConfigError::Invalid("metrics.ngram_order must be at least 1".into()));
        }
        if let Some(w) = &self.metrics.ngram_weights {
            if w.len() != self.metrics.ngram_order {
                return Err(ConfigError::Invalid(
                    "metrics.ngram_weights must have one entry per order".into(),
                ));
            }
        }
        if self.channel.block_len == 0 {
            return Err(ConfigError::Invalid("channel.block_len must be at least 1".into()));
        }
        Ok(())
    }
}
