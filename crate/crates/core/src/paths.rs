//! Shortest alternating Entity–Section paths between a set of entities.
//!
//! For `n` distinct entities the shortest path that visits all of them
//! alternates `e1, s_a, e2, …, s_k, en` and traverses `2(n−1)` relationships,
//! each section mentioning both of its neighbours. Every ordering of the
//! entity set is explored and sections may not repeat within a path. A path
//! and its reversal are the same path; each is reported once, oriented so
//! that its section-id sequence is the lexicographically smaller one.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityRef, GraphError, GraphStore, SectionId};

pub const DEFAULT_PATH_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathNode {
    Entity(EntityRef),
    Section { id: SectionId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePath {
    pub nodes: Vec<PathNode>,
    pub hop_count: usize,
}

impl EvidencePath {
    pub fn sections(&self) -> Vec<SectionId> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                PathNode::Section { id } => Some(*id),
                PathNode::Entity(_) => None,
            })
            .collect()
    }

    pub fn entities(&self) -> Vec<&EntityRef> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                PathNode::Entity(e) => Some(e),
                PathNode::Section { .. } => None,
            })
            .collect()
    }
}

/// Parameters of a path query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathQuery {
    /// Upper bound on relationships per path. `None` means `2(n−1)`.
    pub max_hops: Option<usize>,
    /// Maximum number of paths returned, applied after sorting.
    pub cap: usize,
    /// Report entities missing from the store as errors instead of
    /// returning no paths.
    pub strict: bool,
}

impl Default for PathQuery {
    fn default() -> Self {
        Self {
            max_hops: None,
            cap: DEFAULT_PATH_CAP,
            strict: false,
        }
    }
}

impl GraphStore {
    /// Enumerates the shortest evidence paths joining all `entities`.
    ///
    /// Output is sorted by hop count (descending) and then by section-id
    /// sequence, and truncated to `query.cap`. Larger `max_hops` values are
    /// accepted but still only produce minimum-length paths.
    pub fn shortest_evidence_paths(
        &self,
        entities: &[EntityRef],
        query: &PathQuery,
    ) -> Result<Vec<EvidencePath>, GraphError> {
        let mut ids: Vec<&str> = entities.iter().map(|e| e.entity_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        let n = ids.len();
        if n < 2 {
            return Err(GraphError::TooFewEntities(n));
        }
        let needed = 2 * (n - 1);
        let max_hops = query.max_hops.unwrap_or(needed);
        if max_hops < 2 {
            return Err(GraphError::MaxHopsTooSmall(max_hops));
        }
        if let Some(missing) = ids.iter().find(|id| self.entity(id).is_none()) {
            if query.strict {
                return Err(GraphError::UnknownEntity((*missing).into()));
            }
            return Ok(Vec::new());
        }
        if needed > max_hops || query.cap == 0 {
            return Ok(Vec::new());
        }

        // shared[i][j]: sections mentioning both ids[i] and ids[j].
        let mut shared = alloc::vec![alloc::vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let s = self.co_mentions(ids[i], ids[j]);
                shared[j][i] = s.clone();
                shared[i][j] = s;
            }
        }

        let mut search = Search {
            shared: &shared,
            n,
            cap: query.cap,
            order: Vec::with_capacity(n),
            used: alloc::vec![false; n],
            seq: Vec::with_capacity(n - 1),
            found: BTreeMap::new(),
        };
        for start in 0..n {
            search.order.push(start);
            search.used[start] = true;
            search.extend();
            search.used[start] = false;
            search.order.pop();
        }

        let refs: Vec<EntityRef> = ids
            .iter()
            .map(|id| {
                self.entity(id)
                    .cloned()
                    .unwrap_or_else(|| EntityRef::id(*id))
            })
            .collect();
        Ok(search
            .found
            .into_iter()
            .map(|(seq, order)| {
                let mut nodes = Vec::with_capacity(2 * n - 1);
                for (k, &ei) in order.iter().enumerate() {
                    if k > 0 {
                        nodes.push(PathNode::Section { id: seq[k - 1] });
                    }
                    nodes.push(PathNode::Entity(refs[ei].clone()));
                }
                EvidencePath {
                    nodes,
                    hop_count: needed,
                }
            })
            .collect())
    }
}

struct Search<'a> {
    shared: &'a [Vec<Vec<SectionId>>],
    n: usize,
    cap: usize,
    order: Vec<usize>,
    used: Vec<bool>,
    seq: Vec<SectionId>,
    /// section sequence -> smallest entity ordering producing it
    found: BTreeMap<Vec<SectionId>, Vec<usize>>,
}

impl Search<'_> {
    fn extend(&mut self) {
        if self.order.len() == self.n {
            self.record();
            return;
        }
        if self.cannot_improve() {
            return;
        }
        let last = *self.order.last().expect("search starts with one entity");
        for next in 0..self.n {
            if self.used[next] {
                continue;
            }
            for &sid in &self.shared[last][next] {
                if self.seq.contains(&sid) {
                    continue;
                }
                self.order.push(next);
                self.used[next] = true;
                self.seq.push(sid);
                self.extend();
                self.seq.pop();
                self.used[next] = false;
                self.order.pop();
            }
        }
    }

    /// Once `cap` sequences are held, a prefix already larger than the
    /// largest kept sequence cannot produce anything that survives.
    fn cannot_improve(&self) -> bool {
        if self.found.len() < self.cap {
            return false;
        }
        match self.found.keys().next_back() {
            Some(worst) => self.seq.as_slice().cmp(&worst[..self.seq.len()]) == Ordering::Greater,
            None => false,
        }
    }

    fn record(&mut self) {
        if self.seq.iter().rev().lt(self.seq.iter()) {
            // The reversed walk visits this path in canonical orientation.
            return;
        }
        match self.found.get_mut(&self.seq) {
            Some(existing) => {
                if self.order < *existing {
                    existing.clone_from(&self.order);
                }
            }
            None => {
                self.found.insert(self.seq.clone(), self.order.clone());
                if self.found.len() > self.cap {
                    self.found.pop_last();
                }
            }
        }
    }
}
