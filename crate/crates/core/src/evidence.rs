//! Candidate evidence construction: claim entities, evidence paths, and the
//! single-section fallback when no path connects the entities.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityRef, GraphError, GraphStore, SectionId};
use crate::linking::{EntityLinker, LinkError, LinkerConfig};
use crate::paths::{PathQuery, DEFAULT_PATH_CAP};

pub const DEFAULT_CANDIDATE_CAP: usize = DEFAULT_PATH_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Path,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEvidence {
    /// Section texts in path order, joined by single spaces.
    pub text: String,
    pub sections: Vec<SectionId>,
    /// Claim entities covered by the candidate, sorted by id.
    pub entities: Vec<EntityRef>,
    /// Relationships traversed by the source path; 0 for fallbacks.
    pub hop_count: usize,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvidenceError {
    #[error("no claim entities to build evidence from")]
    EmptyEntitySet,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Entities mentioned in the claim, deduplicated, in order of first
/// appearance.
pub fn claim_entities<L: EntityLinker + ?Sized>(
    claim: &str,
    linker: &L,
    cfg: &LinkerConfig,
) -> Result<Vec<EntityRef>, LinkError> {
    let mut seen = BTreeSet::new();
    Ok(linker
        .annotate(claim, cfg)?
        .into_iter()
        .filter(|m| seen.insert(m.entity.entity_id.clone()))
        .map(|m| m.entity)
        .collect())
}

/// Limits applied while building candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLimits {
    /// `None` means the minimum length `2(n−1)`.
    pub max_hops: Option<usize>,
    pub cap: usize,
    /// When some sections mention every claim entity, use those sections
    /// as the candidates instead of multi-section paths. Off by default.
    #[serde(default)]
    pub prefer_covering_sections: bool,
}

impl Default for CandidateLimits {
    fn default() -> Self {
        Self {
            max_hops: None,
            cap: DEFAULT_CANDIDATE_CAP,
            prefer_covering_sections: false,
        }
    }
}

/// Builds the candidate evidence set for a claim's entities.
///
/// With two or more entities every evidence path becomes one candidate,
/// deduplicated by its unordered section set (the smallest section-id
/// sequence is kept). Without any path, or for a single entity, every
/// section mentioning at least one claim entity becomes a fallback
/// candidate. Results are sorted by hop count (descending) then section-id
/// sequence and truncated to `limits.cap`.
pub fn build_candidates(
    entities: &[EntityRef],
    store: &GraphStore,
    limits: &CandidateLimits,
) -> Result<Vec<CandidateEvidence>, EvidenceError> {
    if entities.is_empty() {
        return Err(EvidenceError::EmptyEntitySet);
    }
    let mut distinct: BTreeMap<&str, &EntityRef> = BTreeMap::new();
    for e in entities {
        distinct.entry(e.entity_id.as_str()).or_insert(e);
    }

    let mut out = Vec::new();
    if distinct.len() >= 2 && limits.prefer_covering_sections {
        out = covering_sections(&distinct, store, limits)?;
    }
    if distinct.len() >= 2 && out.is_empty() {
        let query = PathQuery {
            max_hops: limits.max_hops,
            cap: limits.cap,
            strict: false,
        };
        let paths = store.shortest_evidence_paths(entities, &query)?;
        let mut seen: BTreeSet<Vec<SectionId>> = BTreeSet::new();
        for path in paths {
            let seq = path.sections();
            let mut key = seq.clone();
            key.sort_unstable();
            if !seen.insert(key) {
                continue;
            }
            let mut covered: Vec<EntityRef> = path.entities().into_iter().cloned().collect();
            covered.sort();
            out.push(CandidateEvidence {
                text: join_texts(store, &seq)?,
                sections: seq,
                entities: covered,
                hop_count: path.hop_count,
                origin: Origin::Path,
            });
        }
    }

    if out.is_empty() {
        let mut per_section: BTreeMap<SectionId, Vec<EntityRef>> = BTreeMap::new();
        for (id, e) in &distinct {
            for sid in store.sections_mentioning(id) {
                let covered = per_section.entry(sid).or_default();
                covered.push(store.entity(id).cloned().unwrap_or_else(|| (*e).clone()));
            }
        }
        for (sid, mut covered) in per_section {
            covered.sort();
            out.push(CandidateEvidence {
                text: join_texts(store, &[sid])?,
                sections: alloc::vec![sid],
                entities: covered,
                hop_count: 0,
                origin: Origin::Fallback,
            });
        }
    }

    out.sort_by(|a, b| {
        b.hop_count
            .cmp(&a.hop_count)
            .then_with(|| a.sections.cmp(&b.sections))
    });
    out.truncate(limits.cap);
    Ok(out)
}

/// Sections mentioning every entity, each as a single-section candidate
/// standing in for the path that revisits it between consecutive entities.
fn covering_sections(
    distinct: &BTreeMap<&str, &EntityRef>,
    store: &GraphStore,
    limits: &CandidateLimits,
) -> Result<Vec<CandidateEvidence>, EvidenceError> {
    let needed = 2 * (distinct.len() - 1);
    if limits.max_hops.is_some_and(|h| h < needed) {
        return Ok(Vec::new());
    }
    let mut ids = distinct.keys();
    let first = ids.next().expect("at least two entities");
    let mut shared: BTreeSet<SectionId> = store.sections_mentioning(first).into_iter().collect();
    for id in ids {
        let next: BTreeSet<SectionId> = store.sections_mentioning(id).into_iter().collect();
        shared = shared.intersection(&next).copied().collect();
    }
    let mut covered: Vec<EntityRef> = distinct
        .iter()
        .map(|(id, e)| store.entity(id).cloned().unwrap_or_else(|| (*e).clone()))
        .collect();
    covered.sort();
    shared
        .into_iter()
        .map(|sid| {
            Ok(CandidateEvidence {
                text: join_texts(store, &[sid])?,
                sections: alloc::vec![sid],
                entities: covered.clone(),
                hop_count: needed,
                origin: Origin::Path,
            })
        })
        .collect()
}

fn join_texts(store: &GraphStore, seq: &[SectionId]) -> Result<String, GraphError> {
    let mut text = String::new();
    for (i, sid) in seq.iter().enumerate() {
        let t = store
            .section_text(*sid)
            .ok_or(GraphError::UnknownSection(*sid))?;
        if i > 0 {
            text.push(' ');
        }
        text.push_str(t);
    }
    Ok(text)
}
