//! Service configuration: a TOML file overlaid with `MEDLENS_` environment
//! variables. Nested keys use `__`, so `MEDLENS_SERVER__LISTEN` overrides
//! `server.listen` and `MEDLENS_ANALYSIS__STAR__MAX_ITERS` overrides
//! `analysis.star.max_iters`.

use std::path::{Path, PathBuf};

use config::{Config, Environment, File, FileFormat};
use medlens_core::corpus::{CorpusSnapshot, SegmentationRules};
use medlens_core::extraction::{load_lexicon, EntityExtractor, ExternalExtractor, Lexicon, LexiconExtractor};
use medlens_core::pipeline::{AnalysisConfig, ProcessedCorpus};
use medlens_core::relations::{EmbeddingProvider, ExternalEmbedder, HashingEmbedder, DEFAULT_DIMENSION, DEFAULT_HASH_SEED};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const ENV_PREFIX: &str = "MEDLENS";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub server: ServerConfig,
    pub segmentation: SegmentationConfig,
    pub extraction: ExtractionConfig,
    pub embedding: EmbeddingConfig,
    pub topics: TopicsConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub listen: String,
    pub corpus_dir: PathBuf,
    pub session_dir: PathBuf,
    pub snapshot_interval_secs: u64,
    /// Directory of the browser bundle, served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:8080".into(),
            corpus_dir: PathBuf::from("store/corpora"),
            session_dir: PathBuf::from("store/sessions"),
            snapshot_interval_secs: 30,
            static_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMode {
    #[default]
    BlankLine,
    ClinicalSections,
    /// Blank lines plus the regexes in `headers`.
    Headers,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub mode: SegmentationMode,
    pub headers: Vec<String>,
}

impl SegmentationConfig {
    pub fn rules(&self) -> Result<SegmentationRules, ServiceError> {
        Ok(match self.mode {
            SegmentationMode::BlankLine => SegmentationRules::BlankLine,
            SegmentationMode::ClinicalSections => SegmentationRules::clinical_sections(),
            SegmentationMode::Headers => SegmentationRules::with_headers(&self.headers)?,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionProvider {
    #[default]
    Lexicon,
    External,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub provider: ExtractionProvider,
    pub endpoint: Option<String>,
    /// TSV lexicon replacing the built-in one.
    pub lexicon: Option<PathBuf>,
}

impl ExtractionConfig {
    /// Creates the extractor. The external client is blocking, so call this
    /// off the async runtime.
    pub fn build(&self) -> Result<Box<dyn EntityExtractor>, ServiceError> {
        match self.provider {
            ExtractionProvider::Lexicon => {
                let lexicon = match &self.lexicon {
                    Some(path) => {
                        let (lexicon, warnings) = load_lexicon(path)?;
                        for w in warnings {
                            log::warn!("{}: {w}", path.display());
                        }
                        lexicon
                    }
                    None => Lexicon::builtin(),
                };
                Ok(Box::new(LexiconExtractor::new(lexicon)))
            }
            ExtractionProvider::External => {
                let endpoint = self
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| ServiceError::Config("extraction.endpoint is required".into()))?;
                Ok(Box::new(ExternalExtractor::new(endpoint)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    #[default]
    Hashing,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingKind,
    pub endpoint: Option<String>,
    pub dimension: usize,
    /// Hash seed of the built-in embedder.
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            provider: EmbeddingKind::Hashing,
            endpoint: None,
            dimension: DEFAULT_DIMENSION,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl EmbeddingConfig {
    /// Creates the embedder. Same runtime caveat as [`ExtractionConfig::build`].
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>, ServiceError> {
        match self.provider {
            EmbeddingKind::Hashing => Ok(Box::new(HashingEmbedder::new(self.dimension, self.seed)?)),
            EmbeddingKind::External => {
                let endpoint = self
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| ServiceError::Config("embedding.endpoint is required".into()))?;
                Ok(Box::new(ExternalEmbedder::new(endpoint, self.dimension)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        TopicsConfig { k: 8, seed: 7 }
    }
}

impl ServiceConfig {
    /// Loads `path` (if given) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        Self::load_with_env(path, None)
    }

    /// Like [`ServiceConfig::load`] with an explicit environment, for tests.
    pub fn load_with_env(
        path: Option<&Path>,
        env: Option<std::collections::HashMap<String, String>>,
    ) -> Result<Self, ServiceError> {
        let mut builder = Config::builder();
        if let Some(p) = path {
            if !p.is_file() {
                return Err(ServiceError::Config(format!("config file {} not found", p.display())));
            }
            builder = builder.add_source(File::from(p).format(FileFormat::Toml));
        }
        let env_source = Environment::with_prefix(ENV_PREFIX)
            .prefix_separator("_")
            .separator("__")
            .try_parsing(true)
            .source(env);
        builder = builder.add_source(env_source);
        let cfg: ServiceConfig = builder
            .build()
            .and_then(Config::try_deserialize)
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Extraction, embedding and topics for a snapshot with the configured
    /// providers. Blocking.
    pub fn analyse(&self, snapshot: CorpusSnapshot) -> Result<ProcessedCorpus, ServiceError> {
        let extractor = self.extraction.build()?;
        let embedder = self.embedding.build()?;
        Ok(ProcessedCorpus::new(
            snapshot,
            extractor.as_ref(),
            embedder.as_ref(),
            self.topics.k,
            self.topics.seed,
        )?)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let a = &self.analysis;
        let s = &a.star;
        let checks: [(bool, &str); 12] = [
            ((0.0..=1.0).contains(&a.theta), "analysis.theta must lie in [0, 1]"),
            (a.max_subgraph_size >= 1, "analysis.max_subgraph_size must be at least 1"),
            (a.h_t > 0.0, "analysis.h_t must be positive"),
            (s.boundary_radius > 0.0, "analysis.star.boundary_radius must be positive"),
            (s.unit_force > 0.0, "analysis.star.unit_force must be positive"),
            (s.padding > 0.0, "analysis.star.padding must be positive"),
            (s.star_radius > 0.0, "analysis.star.star_radius must be positive"),
            (s.tolerance > 0.0, "analysis.star.tolerance must be positive"),
            (s.max_iters >= 1, "analysis.star.max_iters must be at least 1"),
            (self.topics.k >= 1, "topics.k must be at least 1"),
            (self.embedding.dimension >= 1, "embedding.dimension must be at least 1"),
            (self.server.snapshot_interval_secs >= 1, "server.snapshot_interval_secs must be at least 1"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(ServiceError::Config((*msg).into())),
            None => Ok(()),
        }
    }
}
