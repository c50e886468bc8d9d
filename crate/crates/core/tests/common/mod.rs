//! Test fixtures and an exhaustive path oracle shared by integration tests.
#![allow(dead_code)]

pub mod exact;

use std::collections::BTreeMap;

use claimgraph_core::{ArticleRecord, EntityMention, EntityRef, GraphStore, SectionId};
use rand::Rng;

pub fn entity_name(i: usize) -> String {
    format!("E{i:02}")
}

/// A random bipartite layout: `sections[k]` lists the entity indices
/// mentioned by section k.
#[derive(Debug, Clone)]
pub struct Layout {
    pub entities: usize,
    pub sections: Vec<Vec<usize>>,
}

impl Layout {
    pub fn random(rng: &mut impl Rng, max_entities: usize, max_sections: usize) -> Self {
        let entities = rng.random_range(2..=max_entities);
        let n_sections = rng.random_range(1..=max_sections);
        let density: f64 = rng.random_range(0.05..0.45);
        let sections = (0..n_sections)
            .map(|_| (0..entities).filter(|_| rng.random_bool(density)).collect())
            .collect();
        Layout { entities, sections }
    }

    /// One article per section, entities attached directly.
    pub fn build(&self) -> (GraphStore, Vec<SectionId>) {
        let mut g = GraphStore::new();
        let mut ids = Vec::new();
        for (k, ents) in self.sections.iter().enumerate() {
            let text = format!(
                "section {k} about {}",
                ents.iter()
                    .map(|e| entity_name(*e))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            let id = g
                .upsert_article(
                    ArticleRecord::new(format!("https://example.org/{k}"), "", text.clone()),
                    vec![text],
                )
                .unwrap()
                .id();
            let sid = g.article_sections(id)[0];
            for &e in ents {
                let name = entity_name(e);
                let mention = EntityMention {
                    entity: EntityRef::new(name.clone(), name.clone()),
                    surface: name,
                    start: 0,
                    end: 1,
                    score: 1.0,
                };
                g.attach_entity(sid, &mention).unwrap();
            }
            ids.push(sid);
        }
        (g, ids)
    }
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn cartesian(choices: &[Vec<SectionId>]) -> Vec<Vec<SectionId>> {
    let mut acc: Vec<Vec<SectionId>> = vec![Vec::new()];
    for options in choices {
        let mut next = Vec::new();
        for prefix in &acc {
            for s in options {
                let mut p = prefix.clone();
                p.push(*s);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// Exhaustive enumeration: every ordering of the distinct query entities,
/// every choice of a co-mentioning section per consecutive pair, no
/// section reused. A walk and its reversal count once, kept in the
/// orientation with the smaller section sequence, labelled with the
/// smallest entity ordering realising that sequence.
///
/// Returns `(section sequence, entity ordering)` sorted by sequence.
pub fn brute_force_paths(
    layout: &Layout,
    section_ids: &[SectionId],
    query: &[String],
) -> Vec<(Vec<SectionId>, Vec<String>)> {
    let mut distinct = query.to_vec();
    distinct.sort();
    distinct.dedup();
    let mentions =
        |sec: usize, name: &str| layout.sections[sec].iter().any(|e| entity_name(*e) == name);
    let mut found: BTreeMap<Vec<SectionId>, Vec<String>> = BTreeMap::new();
    for order in permutations(&distinct) {
        let choices: Vec<Vec<SectionId>> = order
            .windows(2)
            .map(|w| {
                (0..layout.sections.len())
                    .filter(|&k| mentions(k, &w[0]) && mentions(k, &w[1]))
                    .map(|k| section_ids[k])
                    .collect()
            })
            .collect();
        for seq in cartesian(&choices) {
            let mut sorted = seq.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != seq.len() {
                continue;
            }
            let reversed: Vec<SectionId> = seq.iter().rev().copied().collect();
            if reversed < seq {
                continue;
            }
            found
                .entry(seq)
                .and_modify(|o| {
                    if order < *o {
                        *o = order.clone();
                    }
                })
                .or_insert_with(|| order.clone());
        }
    }
    found.into_iter().collect()
}

/// Picks `k` distinct entity names from the layout.
pub fn random_query(rng: &mut impl Rng, layout: &Layout, max_k: usize) -> Vec<String> {
    let k = rng.random_range(2..=max_k.min(layout.entities));
    let mut pool: Vec<usize> = (0..layout.entities).collect();
    let mut q = Vec::with_capacity(k);
    for _ in 0..k {
        let i = rng.random_range(0..pool.len());
        q.push(entity_name(pool.swap_remove(i)));
    }
    q
}
