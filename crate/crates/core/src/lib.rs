//! Entity-centric claim validation.
//!
//! Articles are split into sections, sections are linked to knowledge-base
//! entities, and a claim is checked against text assembled from the
//! sections that connect its entities. Candidates are ranked by semantic
//! similarity and the best one receives an entailment verdict.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, network
//! clients and the command line live in the `claimgraph` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod evidence;
pub mod graph;
pub mod linking;
pub mod metrics;
pub mod paths;
pub mod pipeline;
pub mod scoring;
pub mod segment;
pub mod text;

pub use evidence::{
    build_candidates, claim_entities, CandidateEvidence, CandidateLimits, EvidenceError, Origin,
};
pub use graph::{
    ArticleId, EntityRef, GraphError, GraphStats, GraphStore, SectionId, StoreTables, Upsert,
};
pub use linking::{
    annotate_sections, annotate_store, EntityLinker, EntityMention, Gazetteer, LinkError,
    LinkerConfig,
};
pub use metrics::{
    map_label, score_dataset, ConfusionMatrix, FeverLabel, LabelThresholds, LabeledClaim, Metrics,
};
pub use paths::{EvidencePath, PathNode, PathQuery};
pub use pipeline::{
    evaluate_claim, explain, ClaimEvaluation, EvalStatus, Pipeline, PipelineError, PipelineLimits,
};
pub use scoring::{
    cosine, rank, softmax, CosineSts, Embedding, EmbeddingProvider, NliLabel, NliProvider,
    NliVerdict, ReferenceEmbedder, ReferenceNli, ScoringError, StsScore, StsScorer,
};
pub use segment::{segment, ArticleRecord, SegmentError, SegmentationConfig};
