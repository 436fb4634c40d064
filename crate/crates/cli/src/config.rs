//! Declarative pipeline configuration: one JSON file, flag overrides applied
//! before validation, every referenced path checked up front.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use textmine::analysis::Period;
use textmine::corpus::CorpusFormat;
use textmine::lda::LdaConfig;
use textmine::quality::{
    Thresholds, DEFAULT_HIGH_THRESHOLD, DEFAULT_LOW_THRESHOLD, DEFAULT_MAX_EDIT_DISTANCE,
};
use textmine::selection::{ChainParams, DEFAULT_BURN_IN, DEFAULT_SAMPLES, DEFAULT_THIN};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Jsonl,
    Dir,
}

impl Format {
    pub fn corpus_format(self) -> CorpusFormat {
        match self {
            Format::Jsonl => CorpusFormat::JsonLines,
            Format::Dir => CorpusFormat::DirectoryOfTextFiles,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualitySpec {
    pub low: f64,
    pub high: f64,
    pub max_edit_distance: usize,
}

impl Default for QualitySpec {
    fn default() -> Self {
        QualitySpec {
            low: DEFAULT_LOW_THRESHOLD,
            high: DEFAULT_HIGH_THRESHOLD,
            max_edit_distance: DEFAULT_MAX_EDIT_DISTANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepSpec {
    pub min_term_count: usize,
    pub min_doc_length: usize,
    pub stem: bool,
}

impl Default for PrepSpec {
    fn default() -> Self {
        PrepSpec {
            min_term_count: 2,
            min_doc_length: 5,
            stem: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSpec {
    pub k: usize,
    /// None selects 50/k.
    pub alpha: Option<f64>,
    pub delta: f64,
    pub max_em_iters: usize,
    pub em_tol: f64,
    pub max_e_iters: usize,
    pub e_tol: f64,
}

impl Default for LdaSpec {
    fn default() -> Self {
        let base = LdaConfig::new(10);
        LdaSpec {
            k: base.k,
            alpha: None,
            delta: base.delta,
            max_em_iters: base.max_em_iters,
            em_tol: base.em_tol,
            max_e_iters: base.max_e_iters,
            e_tol: base.e_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSpec {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            burn_in: DEFAULT_BURN_IN,
            samples: DEFAULT_SAMPLES,
            thin: DEFAULT_THIN,
        }
    }
}

fn default_k_grid() -> Vec<usize> {
    (2..=30).step_by(2).collect()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_top_terms() -> usize {
    10
}

fn default_top_words() -> usize {
    50
}

fn default_top_days() -> usize {
    10
}

fn default_period() -> Period {
    Period::Month
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub stopwords: Vec<PathBuf>,
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub quality: QualitySpec,
    #[serde(default)]
    pub prep: PrepSpec,
    #[serde(default)]
    pub lda: LdaSpec,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default)]
    pub chain: ChainSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_top_terms")]
    pub top_terms: usize,
    #[serde(default = "default_top_words")]
    pub top_words: usize,
    #[serde(default = "default_top_days")]
    pub top_days: usize,
    #[serde(default = "default_period")]
    pub period: Period,
}

impl PipelineConfig {
    /// The LdaConfig for one fit at k topics, under this config's seed.
    pub fn lda_config(&self, k: usize) -> LdaConfig {
        let mut c = LdaConfig::new(k);
        if let Some(alpha) = self.lda.alpha {
            c.alpha = alpha;
        }
        c.delta = self.lda.delta;
        c.max_em_iters = self.lda.max_em_iters;
        c.em_tol = self.lda.em_tol;
        c.max_e_iters = self.lda.max_e_iters;
        c.e_tol = self.lda.e_tol;
        c.seed = self.seed;
        c
    }

    pub fn chain_params(&self) -> ChainParams {
        ChainParams {
            burn_in: self.chain.burn_in,
            samples: self.chain.samples,
            thin: self.chain.thin,
        }
    }

    pub fn thresholds(&self) -> Result<Thresholds, textmine::Error> {
        Thresholds::new(self.quality.low, self.quality.high)
    }

    /// Canonical serialization of the effective (post-override) config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load(path: &Path) -> Result<PipelineConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config: {}: {e}", path.display())))
}

fn check_exists(field: &str, path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{field}: no such path: {}",
            path.display()
        )))
    }
}

pub fn validate(config: &PipelineConfig) -> Result<(), CliError> {
    check_exists("corpus.path", &config.corpus.path)?;
    for (i, p) in config.stopwords.iter().enumerate() {
        check_exists(&format!("stopwords[{i}]"), p)?;
    }
    if let Some(dict) = &config.dictionary {
        check_exists("dictionary", dict)?;
    }
    config
        .thresholds()
        .map_err(|e| CliError::Config(format!("quality: {e}")))?;
    config
        .lda_config(config.lda.k)
        .validate()
        .map_err(|e| CliError::Config(format!("lda: {e}")))?;
    if config.k_grid.is_empty() {
        return Err(CliError::Config("k_grid: must not be empty".into()));
    }
    if let Some(bad) = config.k_grid.iter().find(|&&k| k < 2) {
        return Err(CliError::Config(format!(
            "k_grid: entries must be at least 2, got {bad}"
        )));
    }
    if config.chain.samples == 0 || config.chain.thin == 0 {
        return Err(CliError::Config(
            "chain: samples and thin must be at least 1".into(),
        ));
    }
    if config.top_terms == 0 {
        return Err(CliError::Config("top_terms: must be at least 1".into()));
    }
    if config.top_words == 0 {
        return Err(CliError::Config("top_words: must be at least 1".into()));
    }
    Ok(())
}
