//! Linker and scorer selection, and claim evaluation with optional
//! degradation to the in-process reference scorers.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use claimgraph_core::scoring::{Embedding, EmbeddingProvider, ScoringError};
use claimgraph_core::{
    ClaimEvaluation, CosineSts, EntityLinker, EvalStatus, Gazetteer, LinkerConfig, NliProvider,
    NliVerdict, Pipeline, PipelineError, PipelineLimits, ReferenceEmbedder, ReferenceNli,
    StsScorer,
};
use serde::{Deserialize, Serialize};

use crate::remote::RemoteScorer;
use crate::wikifier::{WikifierClient, DEFAULT_ENDPOINT};

pub type DynLinker = Box<dyn EntityLinker + Send + Sync>;
pub type DynSts = Box<dyn StsScorer + Send + Sync>;
pub type DynNli = Box<dyn NliProvider + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LinkerKind {
    Gazetteer,
    Wikifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Reference,
    Remote,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("cannot read gazetteer {path}: {source}")]
    GazetteerIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("gazetteer {path}: {source}")]
    GazetteerFormat {
        path: String,
        #[source]
        source: claimgraph_core::linking::MalformedGazetteer,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Linker(#[from] claimgraph_core::LinkError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

pub fn load_gazetteer(path: impl AsRef<Path>) -> Result<Gazetteer, EngineError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EngineError::GazetteerIo {
        path: path.display().to_string(),
        source,
    })?;
    Gazetteer::from_tsv(&text).map_err(|source| EngineError::GazetteerFormat {
        path: path.display().to_string(),
        source,
    })
}

pub fn build_linker(cfg: &EngineConfig) -> Result<DynLinker, EngineError> {
    cfg.linker_cfg.validate()?;
    Ok(match cfg.linker {
        LinkerKind::Gazetteer => {
            let path = cfg.gazetteer.as_ref().ok_or_else(|| {
                EngineError::Config("the gazetteer linker needs --gazetteer <path>".into())
            })?;
            Box::new(load_gazetteer(path)?)
        }
        LinkerKind::Wikifier => Box::new(WikifierClient::from_env(cfg.wikifier_url.clone())?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub linker: LinkerKind,
    pub gazetteer: Option<PathBuf>,
    pub wikifier_url: String,
    pub linker_cfg: LinkerConfig,
    pub sts: ProviderKind,
    pub nli: ProviderKind,
    pub scorer_url: Option<String>,
    pub limits: PipelineLimits,
    /// Fail instead of falling back to reference scorers when a remote
    /// scorer is unreachable.
    pub strict_providers: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            linker: LinkerKind::Gazetteer,
            gazetteer: None,
            wikifier_url: DEFAULT_ENDPOINT.into(),
            linker_cfg: LinkerConfig::default(),
            sts: ProviderKind::Reference,
            nli: ProviderKind::Reference,
            scorer_url: None,
            limits: PipelineLimits::default(),
            strict_providers: false,
        }
    }
}

/// One remote scorer shared by the similarity and inference sides.
#[derive(Clone)]
struct Shared(Arc<RemoteScorer>);

impl EmbeddingProvider for Shared {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>, ScoringError> {
        self.0.embed(texts)
    }
}

impl NliProvider for Shared {
    fn classify(&self, pairs: &[(&str, &str)]) -> Result<Vec<NliVerdict>, ScoringError> {
        self.0.classify(pairs)
    }
}

/// Result of [`Engine::evaluate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub evaluation: ClaimEvaluation,
    /// Reference scorers answered in place of an unreachable remote one.
    pub degraded: bool,
}

pub struct Engine {
    pipeline: Pipeline<DynLinker, DynSts, DynNli>,
    remote: Option<Arc<RemoteScorer>>,
    uses_remote: bool,
    strict: bool,
    /// A remote scorer was configured but never reached.
    startup_degraded: bool,
}

impl Engine {
    /// Builds an engine from explicit components. No degradation applies.
    pub fn from_parts(
        linker: DynLinker,
        linker_cfg: LinkerConfig,
        sts: DynSts,
        nli: DynNli,
        limits: PipelineLimits,
    ) -> Self {
        Self {
            pipeline: Pipeline::new(linker, sts, nli)
                .with_linker_config(linker_cfg)
                .with_limits(limits),
            remote: None,
            uses_remote: false,
            strict: true,
            startup_degraded: false,
        }
    }

    pub fn build(cfg: &EngineConfig) -> Result<Self, EngineError> {
        cfg.limits
            .validate()
            .map_err(|e| EngineError::Config(e.to_string()))?;
        let linker = build_linker(cfg)?;

        let uses_remote = cfg.sts == ProviderKind::Remote || cfg.nli == ProviderKind::Remote;
        let mut remote = None;
        let mut startup_degraded = false;
        if uses_remote {
            let url = cfg.scorer_url.as_deref().ok_or_else(|| {
                EngineError::Config("remote scorers need --scorer-url <url>".into())
            })?;
            match RemoteScorer::connect(url) {
                Ok(r) => remote = Some(Arc::new(r)),
                Err(e) if !cfg.strict_providers => {
                    tracing::warn!(error = %e, url, "remote scorer unreachable, using reference scorers");
                    startup_degraded = true;
                }
                Err(e) => return Err(e.into()),
            }
        }

        let sts: DynSts = match (&remote, cfg.sts) {
            (Some(r), ProviderKind::Remote) => Box::new(CosineSts(Shared(r.clone()))),
            _ => Box::new(CosineSts(ReferenceEmbedder::default())),
        };
        let nli: DynNli = match (&remote, cfg.nli) {
            (Some(r), ProviderKind::Remote) => Box::new(Shared(r.clone())),
            _ => Box::new(ReferenceNli),
        };
        Ok(Self {
            pipeline: Pipeline::new(linker, sts, nli)
                .with_linker_config(cfg.linker_cfg.clone())
                .with_limits(cfg.limits),
            remote,
            uses_remote,
            strict: cfg.strict_providers,
            startup_degraded,
        })
    }

    pub fn linker(&self) -> &(dyn EntityLinker + Send + Sync) {
        self.pipeline.linker.as_ref()
    }

    pub fn linker_config(&self) -> &LinkerConfig {
        &self.pipeline.linker_cfg
    }

    pub fn limits(&self) -> &PipelineLimits {
        &self.pipeline.limits
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Checks that configured remote scorers answer.
    pub fn health(&self) -> Result<(), ScoringError> {
        match &self.remote {
            Some(r) => r.ping().map(|_| ()),
            None if self.uses_remote && self.strict => {
                Err(ScoringError::ProviderUnavailable("not connected".into()))
            }
            None => Ok(()),
        }
    }

    pub fn evaluate(
        &self,
        claim: &str,
        store: &claimgraph_core::GraphStore,
    ) -> Result<Outcome, PipelineError> {
        let evaluation = self.pipeline.evaluate(claim, store)?;
        let remote_failed =
            evaluation.status == EvalStatus::ProviderUnavailable && self.remote.is_some();
        if remote_failed && !self.strict {
            tracing::warn!(error = ?evaluation.error, "remote scorer failed, retrying with reference scorers");
            let fallback = Pipeline {
                linker: self.linker(),
                linker_cfg: self.pipeline.linker_cfg.clone(),
                sts: CosineSts(ReferenceEmbedder::default()),
                nli: ReferenceNli,
                limits: self.pipeline.limits,
            };
            return Ok(Outcome {
                evaluation: fallback.evaluate(claim, store)?,
                degraded: true,
            });
        }
        Ok(Outcome {
            evaluation,
            degraded: self.startup_degraded,
        })
    }
}
