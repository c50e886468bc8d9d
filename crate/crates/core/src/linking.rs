//! Entity linking: the annotation contract, a deterministic gazetteer
//! linker, and the helper that annotates every section of a store.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityRef, GraphError, GraphStore, SectionId};
use crate::text::{char_slice, word_tokens};

pub const DEFAULT_THRESHOLD: f64 = 0.80;

/// A scored occurrence of an entity in a text. Offsets count characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity: EntityRef,
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkerConfig {
    pub threshold: f64,
    pub language: String,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            language: "el".into(),
        }
    }
}

impl LinkerConfig {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if (0.0..=1.0).contains(&self.threshold) {
            Ok(())
        } else {
            Err(LinkError::InvalidThreshold(self.threshold))
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkError {
    #[error("entity linker unavailable: {0}")]
    LinkerUnavailable(String),
    #[error("malformed linker response: {0}")]
    MalformedResponse(String),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub trait EntityLinker {
    /// Returns mentions scoring at least `cfg.threshold`, sorted by start
    /// offset, with overlaps resolved longest-first then leftmost.
    fn annotate(&self, text: &str, cfg: &LinkerConfig) -> Result<Vec<EntityMention>, LinkError>;
}

impl<L: EntityLinker + ?Sized> EntityLinker for &L {
    fn annotate(&self, text: &str, cfg: &LinkerConfig) -> Result<Vec<EntityMention>, LinkError> {
        (**self).annotate(text, cfg)
    }
}

impl<L: EntityLinker + ?Sized> EntityLinker for Box<L> {
    fn annotate(&self, text: &str, cfg: &LinkerConfig) -> Result<Vec<EntityMention>, LinkError> {
        (**self).annotate(text, cfg)
    }
}

/// Applies the shared post-processing to raw candidate matches.
///
/// Candidates whose offsets do not slice `text` to their surface are
/// dropped. Overlaps are resolved before thresholding so that raising the
/// threshold can only remove mentions.
pub fn finalize_mentions(
    text: &str,
    mut candidates: Vec<EntityMention>,
    cfg: &LinkerConfig,
) -> Vec<EntityMention> {
    let len = text.chars().count();
    candidates.retain(|m| {
        m.start < m.end
            && m.end <= len
            && (0.0..=1.0).contains(&m.score)
            && char_slice(text, m.start, m.end) == m.surface
    });
    candidates.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
            .then(b.score.total_cmp(&a.score))
            .then_with(|| a.entity.entity_id.cmp(&b.entity.entity_id))
    });
    let mut taken: Vec<EntityMention> = Vec::new();
    for m in candidates {
        if taken.iter().all(|t| m.end <= t.start || t.end <= m.start) {
            taken.push(m);
        }
    }
    taken.retain(|m| m.score >= cfg.threshold);
    taken.sort_by_key(|m| m.start);
    taken
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed gazetteer at line {line}: {reason}")]
pub struct MalformedGazetteer {
    pub line: usize,
    pub reason: String,
}

/// Alias table keyed by folded token sequences. Gazetteer matches always
/// score 1.0.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    index: BTreeMap<Vec<String>, Vec<EntityRef>>,
    longest: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `alias<TAB>entity_id<TAB>label` lines, with an optional fourth
    /// column of comma-separated type tags. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn from_tsv(src: &str) -> Result<Self, MalformedGazetteer> {
        let mut g = Gazetteer::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let bad = |reason: &str| MalformedGazetteer {
                line,
                reason: reason.to_string(),
            };
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(bad("expected alias, entity_id and label separated by tabs"));
            }
            let entity_id = cols[1].trim();
            if entity_id.is_empty() {
                return Err(bad("empty entity id"));
            }
            let mut entity = EntityRef::new(entity_id, cols[2].trim());
            if let Some(types) = cols.get(3) {
                entity.types = types
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect();
            }
            if !g.insert(cols[0], entity) {
                return Err(bad("alias has no letters or digits"));
            }
        }
        Ok(g)
    }

    /// Adds an alias. Returns `false` when the alias folds to nothing.
    pub fn insert(&mut self, alias: &str, entity: EntityRef) -> bool {
        let key: Vec<String> = word_tokens(alias).into_iter().map(|t| t.folded).collect();
        if key.is_empty() {
            return false;
        }
        self.longest = self.longest.max(key.len());
        let targets = self.index.entry(key).or_default();
        if !targets.iter().any(|t| t.entity_id == entity.entity_id) {
            targets.push(entity);
        }
        true
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// All targets registered for an alias, in priority order.
    pub fn resolve(&self, alias: &str) -> &[EntityRef] {
        let key: Vec<String> = word_tokens(alias).into_iter().map(|t| t.folded).collect();
        self.index.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }
}

impl EntityLinker for Gazetteer {
    fn annotate(&self, text: &str, cfg: &LinkerConfig) -> Result<Vec<EntityMention>, LinkError> {
        cfg.validate()?;
        let tokens = word_tokens(text);
        let mut candidates = Vec::new();
        let mut key: Vec<String> = Vec::with_capacity(self.longest);
        for i in 0..tokens.len() {
            key.clear();
            for tok in tokens.iter().skip(i).take(self.longest) {
                key.push(tok.folded.clone());
                if let Some(target) = self.index.get(&key).and_then(|t| t.first()) {
                    let (start, end) = (tokens[i].start, tok.end);
                    candidates.push(EntityMention {
                        entity: target.clone(),
                        surface: char_slice(text, start, end).into(),
                        start,
                        end,
                        score: 1.0,
                    });
                }
            }
        }
        Ok(finalize_mentions(text, candidates, cfg))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotateStats {
    pub sections: usize,
    pub mentions: usize,
    pub new_edges: usize,
}

/// Runs the linker over every section of the store and attaches the
/// resulting mentions. Re-running adds no duplicate edges.
pub fn annotate_store<L: EntityLinker + ?Sized>(
    store: &mut GraphStore,
    linker: &L,
    cfg: &LinkerConfig,
) -> Result<AnnotateStats, LinkError> {
    let all: Vec<SectionId> = store.sections().map(|s| s.id).collect();
    annotate_sections(store, linker, cfg, &all)
}

/// Annotates only the given sections; unknown ids are skipped.
pub fn annotate_sections<L: EntityLinker + ?Sized>(
    store: &mut GraphStore,
    linker: &L,
    cfg: &LinkerConfig,
    sections: &[SectionId],
) -> Result<AnnotateStats, LinkError> {
    let work: Vec<(SectionId, String)> = sections
        .iter()
        .filter_map(|id| store.section_text(*id).map(|t| (*id, String::from(t))))
        .collect();
    let mut stats = AnnotateStats::default();
    for (sid, text) in work {
        let mentions = linker.annotate(&text, cfg)?;
        stats.sections += 1;
        stats.mentions += mentions.len();
        for m in &mentions {
            if store.attach_entity(sid, m)? {
                stats.new_edges += 1;
            }
        }
    }
    Ok(stats)
}
