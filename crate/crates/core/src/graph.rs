//! Embedded property graph holding `Article`, `Section` and `Entity` nodes.
//!
//! Articles own an ordered list of sections (`HAS_SECTION`); sections point
//! at the entities they mention (`HAS_ENTITY`), each edge carrying the
//! linker's confidence score. The store is a plain value: concurrency
//! (many readers or one writer) is left to the owner, typically an
//! `RwLock` in the service layer.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::linking::EntityMention;
use crate::segment::ArticleRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArticleId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectionId(pub u64);

impl fmt::Display for ArticleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for SectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// A knowledge-base concept, e.g. a WikiData item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub entity_id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<String>,
}

impl EntityRef {
    pub fn new(entity_id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            entity_id: entity_id.into(),
            label: label.into(),
            types: Vec::new(),
        }
    }

    pub fn id(entity_id: impl Into<String>) -> Self {
        Self::new(entity_id, "")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphStats {
    pub articles: usize,
    pub sections: usize,
    pub entities: usize,
    pub mention_edges: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("article has no sections")]
    EmptySections,
    #[error("section {0} has empty text")]
    EmptySectionText(usize),
    #[error("article url is empty")]
    EmptyUrl,
    #[error("unknown section {0}")]
    UnknownSection(SectionId),
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("entity id is empty")]
    EmptyEntityId,
    #[error("mention score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("path query needs at least two distinct entities, got {0}")]
    TooFewEntities(usize),
    #[error("max_hops must be at least 2, got {0}")]
    MaxHopsTooSmall(usize),
    #[error("inconsistent store tables: {0}")]
    InconsistentTables(String),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ArticleNode {
    pub(crate) record: ArticleRecord,
    pub(crate) sections: Vec<SectionId>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SectionNode {
    pub(crate) article: ArticleId,
    pub(crate) ordinal: u32,
    pub(crate) text: String,
    pub(crate) mentions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EntityNode {
    pub(crate) entity: EntityRef,
    pub(crate) mentioned_in: BTreeMap<SectionId, f64>,
}

/// Result of [`GraphStore::upsert_article`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsert {
    Inserted {
        id: ArticleId,
        sections: usize,
    },
    Replaced {
        id: ArticleId,
        sections: usize,
        removed_sections: usize,
    },
    /// Same url, identical record and sections: nothing touched, existing
    /// entity annotations are kept.
    Unchanged {
        id: ArticleId,
    },
}

impl Upsert {
    pub fn id(&self) -> ArticleId {
        match *self {
            Upsert::Inserted { id, .. }
            | Upsert::Replaced { id, .. }
            | Upsert::Unchanged { id } => id,
        }
    }
}

/// Read-only view of a section.
#[derive(Debug, Clone, Copy)]
pub struct SectionRef<'a> {
    pub id: SectionId,
    pub article: ArticleId,
    pub ordinal: u32,
    pub text: &'a str,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphStore {
    pub(crate) articles: BTreeMap<ArticleId, ArticleNode>,
    pub(crate) by_url: BTreeMap<String, ArticleId>,
    pub(crate) sections: BTreeMap<SectionId, SectionNode>,
    pub(crate) entities: BTreeMap<String, EntityNode>,
    next_article: u64,
    next_section: u64,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            articles: self.articles.len(),
            sections: self.sections.len(),
            entities: self.entities.len(),
            mention_edges: self.sections.values().map(|s| s.mentions.len()).sum(),
        }
    }

    /// Inserts an article with its sections, replacing any article stored
    /// under the same url (together with its sections and mention edges).
    pub fn upsert_article(
        &mut self,
        record: ArticleRecord,
        sections: Vec<String>,
    ) -> Result<Upsert, GraphError> {
        if record.url.is_empty() {
            return Err(GraphError::EmptyUrl);
        }
        if sections.is_empty() {
            return Err(GraphError::EmptySections);
        }
        if let Some(i) = sections.iter().position(|s| s.trim().is_empty()) {
            return Err(GraphError::EmptySectionText(i));
        }

        let (id, removed) = match self.by_url.get(&record.url).copied() {
            Some(id) => {
                let node = &self.articles[&id];
                let same = node.record == record
                    && node.sections.len() == sections.len()
                    && node
                        .sections
                        .iter()
                        .zip(&sections)
                        .all(|(sid, text)| self.sections[sid].text == *text);
                if same {
                    return Ok(Upsert::Unchanged { id });
                }
                (id, Some(self.drop_sections_of(id)))
            }
            None => {
                let id = ArticleId(self.next_article);
                self.next_article += 1;
                (id, None)
            }
        };

        let count = sections.len();
        let mut ids = Vec::with_capacity(count);
        for (ordinal, text) in sections.into_iter().enumerate() {
            let sid = SectionId(self.next_section);
            self.next_section += 1;
            self.sections.insert(
                sid,
                SectionNode {
                    article: id,
                    ordinal: ordinal as u32,
                    text,
                    mentions: BTreeMap::new(),
                },
            );
            ids.push(sid);
        }
        self.by_url.insert(record.url.clone(), id);
        self.articles.insert(
            id,
            ArticleNode {
                record,
                sections: ids,
            },
        );

        Ok(match removed {
            None => Upsert::Inserted {
                id,
                sections: count,
            },
            Some(removed_sections) => Upsert::Replaced {
                id,
                sections: count,
                removed_sections,
            },
        })
    }

    /// Removes the article stored under `url`. Returns whether one existed.
    pub fn remove_article(&mut self, url: &str) -> bool {
        match self.by_url.remove(url) {
            Some(id) => {
                self.drop_sections_of(id);
                self.articles.remove(&id);
                true
            }
            None => false,
        }
    }

    fn drop_sections_of(&mut self, id: ArticleId) -> usize {
        let Some(node) = self.articles.get_mut(&id) else {
            return 0;
        };
        let old = core::mem::take(&mut node.sections);
        for sid in &old {
            if let Some(section) = self.sections.remove(sid) {
                for entity_id in section.mentions.keys() {
                    let orphan = match self.entities.get_mut(entity_id) {
                        Some(e) => {
                            e.mentioned_in.remove(sid);
                            e.mentioned_in.is_empty()
                        }
                        None => false,
                    };
                    if orphan {
                        self.entities.remove(entity_id);
                    }
                }
            }
        }
        old.len()
    }

    /// Links a section to an entity. Re-attaching the same pair keeps a
    /// single edge carrying the maximum score. Returns `true` when the edge
    /// is new.
    pub fn attach_entity(
        &mut self,
        section: SectionId,
        mention: &EntityMention,
    ) -> Result<bool, GraphError> {
        let score = mention.score;
        if !(0.0..=1.0).contains(&score) {
            return Err(GraphError::InvalidScore(score));
        }
        let entity = &mention.entity;
        if entity.entity_id.is_empty() {
            return Err(GraphError::EmptyEntityId);
        }
        let node = self
            .sections
            .get_mut(&section)
            .ok_or(GraphError::UnknownSection(section))?;

        let fresh = match node.mentions.get_mut(&entity.entity_id) {
            Some(existing) => {
                if score > *existing {
                    *existing = score;
                }
                false
            }
            None => {
                node.mentions.insert(entity.entity_id.clone(), score);
                true
            }
        };
        let merged = node.mentions[&entity.entity_id];

        let enode = self
            .entities
            .entry(entity.entity_id.clone())
            .or_insert_with(|| EntityNode {
                entity: EntityRef::id(entity.entity_id.clone()),
                mentioned_in: BTreeMap::new(),
            });
        if enode.entity.label.is_empty() {
            enode.entity.label = entity.label.clone();
        }
        for t in &entity.types {
            if !enode.entity.types.contains(t) {
                enode.entity.types.push(t.clone());
            }
        }
        enode.entity.types.sort();
        enode.mentioned_in.insert(section, merged);
        Ok(fresh)
    }

    pub fn entity(&self, entity_id: &str) -> Option<&EntityRef> {
        self.entities.get(entity_id).map(|e| &e.entity)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRef> {
        self.entities.values().map(|e| &e.entity)
    }

    /// Sections with a `HAS_ENTITY` edge to the entity, ordered by id.
    /// Unknown entities yield an empty list.
    pub fn sections_mentioning(&self, entity_id: &str) -> Vec<SectionId> {
        self.entities
            .get(entity_id)
            .map(|e| e.mentioned_in.keys().copied().collect())
            .unwrap_or_default()
    }

    /// Entities mentioned by a section with their edge scores, ordered by id.
    pub fn mentions_of(&self, section: SectionId) -> Vec<(&str, f64)> {
        self.sections
            .get(&section)
            .map(|s| s.mentions.iter().map(|(k, v)| (k.as_str(), *v)).collect())
            .unwrap_or_default()
    }

    pub fn mention_score(&self, section: SectionId, entity_id: &str) -> Option<f64> {
        self.sections
            .get(&section)?
            .mentions
            .get(entity_id)
            .copied()
    }

    pub fn section(&self, id: SectionId) -> Option<SectionRef<'_>> {
        self.sections.get(&id).map(|s| SectionRef {
            id,
            article: s.article,
            ordinal: s.ordinal,
            text: &s.text,
        })
    }

    pub fn section_text(&self, id: SectionId) -> Option<&str> {
        self.sections.get(&id).map(|s| s.text.as_str())
    }

    pub fn sections(&self) -> impl Iterator<Item = SectionRef<'_>> {
        self.sections.iter().map(|(&id, s)| SectionRef {
            id,
            article: s.article,
            ordinal: s.ordinal,
            text: &s.text,
        })
    }

    pub fn article_by_url(&self, url: &str) -> Option<ArticleId> {
        self.by_url.get(url).copied()
    }

    pub fn article(&self, id: ArticleId) -> Option<&ArticleRecord> {
        self.articles.get(&id).map(|a| &a.record)
    }

    /// Sections of an article in ordinal order.
    pub fn article_sections(&self, id: ArticleId) -> &[SectionId] {
        self.articles
            .get(&id)
            .map(|a| a.sections.as_slice())
            .unwrap_or(&[])
    }

    /// Sections mentioning both entities, ordered by id.
    pub(crate) fn co_mentions(&self, a: &str, b: &str) -> Vec<SectionId> {
        match (self.entities.get(a), self.entities.get(b)) {
            (Some(x), Some(y)) => {
                let (small, large) = if x.mentioned_in.len() <= y.mentioned_in.len() {
                    (x, y)
                } else {
                    (y, x)
                };
                small
                    .mentioned_in
                    .keys()
                    .filter(|s| large.mentioned_in.contains_key(*s))
                    .copied()
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Flattens the store into node and edge tables.
    pub fn to_tables(&self) -> StoreTables {
        let mut t = StoreTables {
            next_article: self.next_article,
            next_section: self.next_section,
            ..StoreTables::default()
        };
        for (&id, a) in &self.articles {
            t.articles.push(ArticleRow {
                id,
                record: a.record.clone(),
            });
            for (ordinal, &sid) in a.sections.iter().enumerate() {
                t.has_section.push(HasSectionRow {
                    article: id,
                    section: sid,
                    ordinal: ordinal as u32,
                });
            }
        }
        for (&id, s) in &self.sections {
            t.sections.push(SectionRow {
                id,
                text: s.text.clone(),
            });
            for (entity_id, &score) in &s.mentions {
                t.has_entity.push(HasEntityRow {
                    section: id,
                    entity_id: entity_id.clone(),
                    score,
                });
            }
        }
        t.entities = self.entities.values().map(|e| e.entity.clone()).collect();
        t
    }

    /// Rebuilds a store from tables, checking referential integrity.
    pub fn from_tables(t: StoreTables) -> Result<Self, GraphError> {
        let bad = |msg: String| GraphError::InconsistentTables(msg);
        let mut store = GraphStore {
            next_article: t.next_article,
            next_section: t.next_section,
            ..GraphStore::default()
        };

        for row in t.articles {
            if row.id.0 >= t.next_article {
                return Err(bad(alloc::format!("article id {} beyond counter", row.id)));
            }
            if store
                .by_url
                .insert(row.record.url.clone(), row.id)
                .is_some()
            {
                return Err(bad(alloc::format!("duplicate url {}", row.record.url)));
            }
            if store
                .articles
                .insert(
                    row.id,
                    ArticleNode {
                        record: row.record,
                        sections: Vec::new(),
                    },
                )
                .is_some()
            {
                return Err(bad(alloc::format!("duplicate article id {}", row.id)));
            }
        }
        let mut texts: BTreeMap<SectionId, String> = BTreeMap::new();
        for row in t.sections {
            if row.id.0 >= t.next_section {
                return Err(bad(alloc::format!("section id {} beyond counter", row.id)));
            }
            if texts.insert(row.id, row.text).is_some() {
                return Err(bad(alloc::format!("duplicate section id {}", row.id)));
            }
        }
        let mut edges = t.has_section;
        edges.sort_by_key(|e| (e.article, e.ordinal));
        for e in edges {
            let text = texts.remove(&e.section).ok_or_else(|| {
                bad(alloc::format!(
                    "HAS_SECTION to unknown or shared section {}",
                    e.section
                ))
            })?;
            let article = store.articles.get_mut(&e.article).ok_or_else(|| {
                bad(alloc::format!(
                    "HAS_SECTION from unknown article {}",
                    e.article
                ))
            })?;
            if e.ordinal as usize != article.sections.len() {
                return Err(bad(alloc::format!(
                    "gap in section ordinals of {}",
                    e.article
                )));
            }
            article.sections.push(e.section);
            store.sections.insert(
                e.section,
                SectionNode {
                    article: e.article,
                    ordinal: e.ordinal,
                    text,
                    mentions: BTreeMap::new(),
                },
            );
        }
        if let Some(orphan) = texts.keys().next() {
            return Err(bad(alloc::format!("section {} has no article", orphan)));
        }
        if let Some((id, _)) = store.articles.iter().find(|(_, a)| a.sections.is_empty()) {
            return Err(bad(alloc::format!("article {} has no sections", id)));
        }

        let mut entity_rows: BTreeMap<String, EntityRef> = BTreeMap::new();
        for e in t.entities {
            if entity_rows.insert(e.entity_id.clone(), e).is_some() {
                return Err(bad("duplicate entity id".into()));
            }
        }
        for row in t.has_entity {
            if !(0.0..=1.0).contains(&row.score) {
                return Err(bad(alloc::format!("score {} outside [0, 1]", row.score)));
            }
            let entity = entity_rows.get(&row.entity_id).ok_or_else(|| {
                bad(alloc::format!(
                    "HAS_ENTITY to unknown entity {}",
                    row.entity_id
                ))
            })?;
            let section = store.sections.get_mut(&row.section).ok_or_else(|| {
                bad(alloc::format!(
                    "HAS_ENTITY from unknown section {}",
                    row.section
                ))
            })?;
            if section
                .mentions
                .insert(row.entity_id.clone(), row.score)
                .is_some()
            {
                return Err(bad("duplicate HAS_ENTITY edge".into()));
            }
            store
                .entities
                .entry(row.entity_id)
                .or_insert_with(|| EntityNode {
                    entity: entity.clone(),
                    mentioned_in: BTreeMap::new(),
                })
                .mentioned_in
                .insert(row.section, row.score);
        }
        let connected: BTreeSet<&String> = store.entities.keys().collect();
        if let Some(orphan) = entity_rows.keys().find(|k| !connected.contains(k)) {
            return Err(bad(alloc::format!("entity {} has no mentions", orphan)));
        }
        Ok(store)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRow {
    pub id: ArticleId,
    #[serde(flatten)]
    pub record: ArticleRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRow {
    pub id: SectionId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HasSectionRow {
    pub article: ArticleId,
    pub section: SectionId,
    pub ordinal: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HasEntityRow {
    pub section: SectionId,
    pub entity_id: String,
    pub score: f64,
}

/// Flat table form of a store: three node tables and two edge tables, plus
/// the id counters so that reloaded stores keep allocating the same ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreTables {
    pub next_article: u64,
    pub next_section: u64,
    pub articles: Vec<ArticleRow>,
    pub sections: Vec<SectionRow>,
    pub entities: Vec<EntityRef>,
    pub has_section: Vec<HasSectionRow>,
    pub has_entity: Vec<HasEntityRow>,
}
