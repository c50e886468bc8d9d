//! Claim evaluation end to end: entities, candidate evidence, similarity
//! ranking and an inference verdict for the best candidate.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::evidence::{
    build_candidates, claim_entities, CandidateEvidence, CandidateLimits, DEFAULT_CANDIDATE_CAP,
};
use crate::graph::{EntityRef, GraphStore};
use crate::linking::{EntityLinker, LinkError, LinkerConfig};
use crate::scoring::{rank, NliLabel, NliProvider, NliVerdict, StsScore, StsScorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    NoEntities,
    NoEvidence,
    LinkerUnavailable,
    ProviderUnavailable,
}

impl EvalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalStatus::Ok => "ok",
            EvalStatus::NoEntities => "no_entities",
            EvalStatus::NoEvidence => "no_evidence",
            EvalStatus::LinkerUnavailable => "linker_unavailable",
            EvalStatus::ProviderUnavailable => "provider_unavailable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    #[serde(flatten)]
    pub candidate: CandidateEvidence,
    pub sts: StsScore,
    /// Present for the first `nli_top_k` candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<NliVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimEvaluation {
    pub claim: String,
    pub status: EvalStatus,
    pub entities: Vec<EntityRef>,
    pub best: Option<CandidateEvidence>,
    pub sts: Option<StsScore>,
    pub verdict: Option<NliVerdict>,
    /// Top-k ranked candidates, best first.
    pub all_candidates: Vec<RankedCandidate>,
    /// Number of candidates ranked before truncation to top-k.
    pub total_candidates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ClaimEvaluation {
    fn degraded(
        claim: &str,
        status: EvalStatus,
        entities: Vec<EntityRef>,
        error: Option<String>,
    ) -> Self {
        Self {
            claim: claim.into(),
            status,
            entities,
            best: None,
            sts: None,
            verdict: None,
            all_candidates: Vec::new(),
            total_candidates: 0,
            error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineLimits {
    /// `None` means the minimum path length `2(n−1)`.
    pub max_hops: Option<usize>,
    pub max_candidates: usize,
    pub top_k: usize,
    pub nli_top_k: usize,
    /// See [`CandidateLimits::prefer_covering_sections`].
    #[serde(default)]
    pub prefer_covering_sections: bool,
}

impl Default for PipelineLimits {
    fn default() -> Self {
        Self {
            max_hops: None,
            max_candidates: DEFAULT_CANDIDATE_CAP,
            top_k: 10,
            nli_top_k: 1,
            prefer_covering_sections: false,
        }
    }
}

impl PipelineLimits {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if matches!(self.max_hops, Some(h) if h < 2) {
            return Err(PipelineError::InvalidLimits("max_hops must be at least 2"));
        }
        if self.max_candidates == 0 || self.top_k == 0 || self.nli_top_k == 0 {
            return Err(PipelineError::InvalidLimits(
                "candidate limits must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("claim is empty")]
    EmptyClaim,
    #[error("invalid limits: {0}")]
    InvalidLimits(&'static str),
    #[error(transparent)]
    Linker(LinkError),
}

/// Linker, scorers and limits wired together. Evaluation never mutates the
/// store and holds no state between claims.
#[derive(Debug, Clone)]
pub struct Pipeline<L, S, N> {
    pub linker: L,
    pub linker_cfg: LinkerConfig,
    pub sts: S,
    pub nli: N,
    pub limits: PipelineLimits,
}

impl<L, S, N> Pipeline<L, S, N>
where
    L: EntityLinker,
    S: StsScorer,
    N: NliProvider,
{
    pub fn new(linker: L, sts: S, nli: N) -> Self {
        Self {
            linker,
            linker_cfg: LinkerConfig::default(),
            sts,
            nli,
            limits: PipelineLimits::default(),
        }
    }

    pub fn with_linker_config(mut self, cfg: LinkerConfig) -> Self {
        self.linker_cfg = cfg;
        self
    }

    pub fn with_limits(mut self, limits: PipelineLimits) -> Self {
        self.limits = limits;
        self
    }

    /// Evaluates a claim against the store.
    ///
    /// Only an empty claim or invalid configuration is an error; missing
    /// entities, missing evidence and failing back ends are reported through
    /// [`ClaimEvaluation::status`].
    pub fn evaluate(
        &self,
        claim: &str,
        store: &GraphStore,
    ) -> Result<ClaimEvaluation, PipelineError> {
        if claim.trim().is_empty() {
            return Err(PipelineError::EmptyClaim);
        }
        self.limits.validate()?;
        if let Err(e) = self.linker_cfg.validate() {
            return Err(PipelineError::Linker(e));
        }

        let entities = match claim_entities(claim, &self.linker, &self.linker_cfg) {
            Ok(e) => e,
            Err(e) => {
                return Ok(ClaimEvaluation::degraded(
                    claim,
                    EvalStatus::LinkerUnavailable,
                    Vec::new(),
                    Some(e.to_string()),
                ))
            }
        };
        if entities.is_empty() {
            return Ok(ClaimEvaluation::degraded(
                claim,
                EvalStatus::NoEntities,
                entities,
                None,
            ));
        }

        let limits = CandidateLimits {
            max_hops: self.limits.max_hops,
            cap: self.limits.max_candidates,
            prefer_covering_sections: self.limits.prefer_covering_sections,
        };
        let candidates = match build_candidates(&entities, store, &limits) {
            Ok(c) if !c.is_empty() => c,
            Ok(_) => {
                return Ok(ClaimEvaluation::degraded(
                    claim,
                    EvalStatus::NoEvidence,
                    entities,
                    None,
                ))
            }
            Err(e) => {
                return Ok(ClaimEvaluation::degraded(
                    claim,
                    EvalStatus::NoEvidence,
                    entities,
                    Some(e.to_string()),
                ))
            }
        };

        let provider_down = |entities, e: &dyn core::fmt::Display| {
            ClaimEvaluation::degraded(
                claim,
                EvalStatus::ProviderUnavailable,
                entities,
                Some(e.to_string()),
            )
        };

        let mut ranked = match rank(claim, candidates, &self.sts) {
            Ok(r) => r,
            Err(e) => return Ok(provider_down(entities, &e)),
        };
        let total = ranked.len();
        ranked.truncate(self.limits.top_k);

        // Evidence is the premise, the claim the hypothesis.
        let judged = self.limits.nli_top_k.min(ranked.len());
        let pairs: Vec<(&str, &str)> = ranked[..judged]
            .iter()
            .map(|(c, _)| (c.text.as_str(), claim))
            .collect();
        let verdicts = match self.nli.classify(&pairs) {
            Ok(v) if v.len() == judged => v,
            Ok(v) => {
                let msg = alloc::format!("expected {} verdicts, got {}", judged, v.len());
                return Ok(provider_down(entities, &msg));
            }
            Err(e) => return Ok(provider_down(entities, &e)),
        };

        let mut verdicts = verdicts.into_iter();
        let candidates: Vec<RankedCandidate> = ranked
            .into_iter()
            .map(|(candidate, sts)| RankedCandidate {
                candidate,
                sts,
                verdict: verdicts.next(),
            })
            .collect();
        let head = &candidates[0];
        Ok(ClaimEvaluation {
            claim: claim.into(),
            status: EvalStatus::Ok,
            entities,
            best: Some(head.candidate.clone()),
            sts: Some(head.sts),
            verdict: head.verdict,
            total_candidates: total,
            all_candidates: candidates,
            error: None,
        })
    }
}

/// Convenience wrapper over [`Pipeline::evaluate`].
pub fn evaluate_claim<L, S, N>(
    claim: &str,
    store: &GraphStore,
    linker: L,
    linker_cfg: &LinkerConfig,
    sts: S,
    nli: N,
    limits: &PipelineLimits,
) -> Result<ClaimEvaluation, PipelineError>
where
    L: EntityLinker,
    S: StsScorer,
    N: NliProvider,
{
    Pipeline {
        linker,
        linker_cfg: linker_cfg.clone(),
        sts,
        nli,
        limits: *limits,
    }
    .evaluate(claim, store)
}

fn label_name(label: NliLabel) -> &'static str {
    match label {
        NliLabel::Contradiction => "contradiction",
        NliLabel::Entailment => "entailment",
        NliLabel::Neutral => "neutral",
    }
}

/// Renders an evaluation as a plain-text report with a fixed field order.
pub fn explain(eval: &ClaimEvaluation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "claim: {}", eval.claim);
    let _ = writeln!(out, "status: {}", eval.status.as_str());
    if let Some(err) = &eval.error {
        let _ = writeln!(out, "error: {err}");
    }
    let entities: Vec<String> = eval
        .entities
        .iter()
        .map(|e| {
            if e.label.is_empty() {
                e.entity_id.clone()
            } else {
                alloc::format!("{} ({})", e.entity_id, e.label)
            }
        })
        .collect();
    let _ = writeln!(
        out,
        "entities: {}",
        if entities.is_empty() {
            "-".into()
        } else {
            entities.join(", ")
        }
    );
    let _ = writeln!(
        out,
        "candidates: {} of {}",
        eval.all_candidates.len(),
        eval.total_candidates
    );
    for (i, rc) in eval.all_candidates.iter().enumerate() {
        let sections: Vec<String> = rc
            .candidate
            .sections
            .iter()
            .map(|s| s.to_string())
            .collect();
        let _ = writeln!(
            out,
            "  {:>2}. sts={:.4} origin={} sections=[{}] {}",
            i + 1,
            rc.sts.0,
            match rc.candidate.origin {
                crate::evidence::Origin::Path => "path",
                crate::evidence::Origin::Fallback => "fallback",
            },
            sections.join(","),
            rc.candidate.text
        );
    }
    match (&eval.sts, &eval.verdict) {
        (Some(sts), Some(v)) => {
            let _ = writeln!(out, "best sts: {:.4}", sts.0);
            let _ = writeln!(
                out,
                "verdict: c={:.3} e={:.3} n={:.3} -> {}",
                v.contradiction,
                v.entailment,
                v.neutral,
                label_name(v.argmax())
            );
        }
        _ => {
            let _ = writeln!(out, "verdict: none");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::Gazetteer;
    use crate::scoring::{CosineSts, ReferenceEmbedder, ReferenceNli};
    use crate::segment::ArticleRecord;
    use alloc::vec;

    fn gazetteer() -> Gazetteer {
        Gazetteer::from_tsv("Denmark\tQ35\tDenmark\nAustria\tQ40\tAustria\n").unwrap()
    }

    fn pipeline(g: &Gazetteer) -> Pipeline<&Gazetteer, CosineSts<ReferenceEmbedder>, ReferenceNli> {
        Pipeline::new(g, CosineSts(ReferenceEmbedder::default()), ReferenceNli)
    }

    #[test]
    fn empty_store_has_no_evidence() {
        let g = gazetteer();
        let out = pipeline(&g)
            .evaluate("Denmark and Austria agree", &GraphStore::new())
            .unwrap();
        assert_eq!(out.status, EvalStatus::NoEvidence);
        assert!(out.verdict.is_none());
        assert_eq!(out.entities.len(), 2);
    }

    #[test]
    fn no_entities_status() {
        let g = gazetteer();
        let out = pipeline(&g)
            .evaluate("Nothing to see", &GraphStore::new())
            .unwrap();
        assert_eq!(out.status, EvalStatus::NoEntities);
        assert!(out.entities.is_empty());
        assert!(explain(&out).contains("status: no_entities"));
    }

    #[test]
    fn empty_claim_is_error() {
        let g = gazetteer();
        assert_eq!(
            pipeline(&g).evaluate("  ", &GraphStore::new()),
            Err(PipelineError::EmptyClaim)
        );
    }

    #[test]
    fn invalid_limits_rejected() {
        let g = gazetteer();
        let p = pipeline(&g).with_limits(PipelineLimits {
            top_k: 0,
            ..PipelineLimits::default()
        });
        assert!(matches!(
            p.evaluate("Denmark", &GraphStore::new()),
            Err(PipelineError::InvalidLimits(_))
        ));
    }

    struct Down;
    impl EntityLinker for Down {
        fn annotate(
            &self,
            _: &str,
            _: &LinkerConfig,
        ) -> Result<Vec<crate::linking::EntityMention>, LinkError> {
            Err(LinkError::LinkerUnavailable("timeout".into()))
        }
    }

    #[test]
    fn linker_failure_is_a_status() {
        let p = Pipeline::new(Down, CosineSts(ReferenceEmbedder::default()), ReferenceNli);
        let out = p.evaluate("Denmark", &GraphStore::new()).unwrap();
        assert_eq!(out.status, EvalStatus::LinkerUnavailable);
        assert!(out.error.unwrap().contains("timeout"));
    }

    #[test]
    fn ok_run_reports_candidates() {
        let mut store = GraphStore::new();
        store
            .upsert_article(
                ArticleRecord::new("u", "", ""),
                vec![
                    "Denmark and Austria agree on refugees.".into(),
                    "Denmark votes.".into(),
                ],
            )
            .unwrap();
        let g = gazetteer();
        crate::linking::annotate_store(&mut store, &g, &LinkerConfig::default()).unwrap();
        let out = pipeline(&g)
            .evaluate("Denmark and Austria agree", &store)
            .unwrap();
        assert_eq!(out.status, EvalStatus::Ok);
        assert_eq!(
            out.best.as_ref().unwrap().text,
            "Denmark and Austria agree on refugees."
        );
        assert_eq!(out.verdict.unwrap().argmax(), NliLabel::Entailment);
        let report = explain(&out);
        assert_eq!(
            report.lines().filter(|l| l.contains("sts=")).count(),
            out.all_candidates.len()
        );
        assert_eq!(report, explain(&out.clone()));
    }
}
