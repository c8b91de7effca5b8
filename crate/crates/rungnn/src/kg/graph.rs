//! Core graph types and traversal operations.

use std::collections::{HashMap, HashSet, VecDeque};

use super::KgError;

/// Dense 0-based entity index, stable for the lifetime of a vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Dense 0-based relation index over the AUGMENTED relation space:
/// `0..base` are originals, `base..2·base` their inverses, `2·base` identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

impl RelationId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// One directed fact (head, relation, tail).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Triple {
            head: EntityId(head),
            relation: RelationId(relation),
            tail: EntityId(tail),
        }
    }
}

/// Entity and relation name tables with dense first-seen indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    entity_names: Vec<String>,
    relation_names: Vec<String>,
    entity_index: HashMap<String, u32>,
    relation_index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        &self.entity_names[e.idx()]
    }

    /// Name of an augmented relation: inverses print with a `_inv` suffix,
    /// the identity relation prints as `_identity`.
    pub fn relation_display(&self, r: RelationId) -> String {
        let base = self.relation_names.len();
        let i = r.idx();
        if i < base {
            self.relation_names[i].clone()
        } else if i < 2 * base {
            format!("{}_inv", self.relation_names[i - base])
        } else {
            "_identity".to_string()
        }
    }

    pub fn base_relation_name(&self, idx: usize) -> &str {
        &self.relation_names[idx]
    }

    pub fn entity(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied().map(EntityId)
    }

    pub fn relation(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied().map(RelationId)
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn add_entity(&mut self, name: &str) -> Result<EntityId, KgError> {
        if self.entity_index.contains_key(name) {
            return Err(KgError::DuplicateName {
                kind: "entity",
                name: name.to_string(),
            });
        }
        let id = self.entity_names.len() as u32;
        self.entity_names.push(name.to_string());
        self.entity_index.insert(name.to_string(), id);
        Ok(EntityId(id))
    }

    pub fn add_relation(&mut self, name: &str) -> Result<RelationId, KgError> {
        if self.relation_index.contains_key(name) {
            return Err(KgError::DuplicateName {
                kind: "relation",
                name: name.to_string(),
            });
        }
        let id = self.relation_names.len() as u32;
        self.relation_names.push(name.to_string());
        self.relation_index.insert(name.to_string(), id);
        Ok(RelationId(id))
    }

    pub fn entity_or_insert(&mut self, name: &str) -> EntityId {
        match self.entity(name) {
            Some(id) => id,
            None => self.add_entity(name).expect("checked absent"),
        }
    }

    pub fn relation_or_insert(&mut self, name: &str) -> RelationId {
        match self.relation(name) {
            Some(id) => id,
            None => self.add_relation(name).expect("checked absent"),
        }
    }
}

/// Immutable augmented triple store with head-indexed adjacency.
///
/// Construction adds, for every base triple (s, r, o), the inverse
/// (o, r + |R|, s), and one identity self-loop (e, 2·|R|, e) per entity.
/// Triples are deduplicated and sorted by (head, relation, tail); adjacency
/// is a CSR index over that order, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    vocab: Vocabulary,
    base_relation_count: usize,
    triples: Vec<Triple>,
    /// CSR offsets: triples of entity e occupy `offsets[e]..offsets[e+1]`.
    offsets: Vec<usize>,
}

impl KnowledgeGraph {
    /// Build the augmented graph from base-space triples.
    pub fn augment(base_triples: &[Triple], vocab: Vocabulary) -> Result<Self, KgError> {
        let base = vocab.num_relations();
        let entities = vocab.num_entities();
        for t in base_triples {
            if t.relation.idx() >= base {
                return Err(KgError::RelationOutOfRange {
                    index: t.relation.idx(),
                    base,
                });
            }
            for e in [t.head, t.tail] {
                if e.idx() >= entities {
                    return Err(KgError::EntityOutOfRange {
                        index: e.idx(),
                        count: entities,
                    });
                }
            }
        }

        let identity = (2 * base) as u32;
        let mut triples = Vec::with_capacity(2 * base_triples.len() + entities);
        for t in base_triples {
            triples.push(*t);
            triples.push(Triple {
                head: t.tail,
                relation: RelationId(t.relation.0 + base as u32),
                tail: t.head,
            });
        }
        for e in 0..entities {
            triples.push(Triple::new(e as u32, identity, e as u32));
        }
        triples.sort_unstable();
        triples.dedup();

        let mut offsets = vec![0usize; entities + 1];
        for t in &triples {
            offsets[t.head.idx() + 1] += 1;
        }
        for i in 0..entities {
            offsets[i + 1] += offsets[i];
        }

        Ok(KnowledgeGraph {
            vocab,
            base_relation_count: base,
            triples,
            offsets,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn base_relation_count(&self) -> usize {
        self.base_relation_count
    }

    /// 2·|R| + 1: originals, inverses, identity.
    pub fn augmented_relation_count(&self) -> usize {
        2 * self.base_relation_count + 1
    }

    pub fn identity_relation(&self) -> RelationId {
        RelationId((2 * self.base_relation_count) as u32)
    }

    /// Inverse of an augmented relation (identity maps to itself).
    pub fn inverse_relation(&self, r: RelationId) -> RelationId {
        let base = self.base_relation_count;
        let i = r.idx();
        if i < base {
            RelationId((i + base) as u32)
        } else if i < 2 * base {
            RelationId((i - base) as u32)
        } else {
            r
        }
    }

    /// All augmented triples, sorted by (head, relation, tail).
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// Outgoing triples of an entity, in (relation, tail) order.
    pub fn outgoing(&self, e: EntityId) -> &[Triple] {
        &self.triples[self.offsets[e.idx()]..self.offsets[e.idx() + 1]]
    }

    /// Base triples recovered by mapping inverse triples back; used by the
    /// augmentation involution property and by serialization.
    pub fn base_triples(&self) -> Vec<Triple> {
        let base = self.base_relation_count;
        self.triples
            .iter()
            .filter(|t| t.relation.idx() < base)
            .copied()
            .collect()
    }
}

/// Entities reached so far and the edges active at this layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    /// Reached entities; earlier entities keep their position across layers.
    pub entities: Vec<EntityId>,
    /// Edges whose head was reached at the previous layer, sorted by
    /// (head, relation, tail).
    pub edges: Vec<Triple>,
}

impl Frontier {
    /// Layer-0 frontier: only the query head, no edges.
    pub fn seed(source: EntityId) -> Self {
        Frontier {
            entities: vec![source],
            edges: Vec::new(),
        }
    }
}

/// One progressive-expansion step: activate every edge whose head is already
/// reached and absorb the new tails. Identity self-loops keep old entities
/// active, so the reached set only grows.
pub fn expand_frontier(kg: &KnowledgeGraph, prev: &Frontier) -> Frontier {
    assert!(!prev.entities.is_empty(), "cannot expand an empty frontier");
    let mut member = vec![false; kg.num_entities()];
    for e in &prev.entities {
        member[e.idx()] = true;
    }

    let mut edges = Vec::new();
    for &e in &prev.entities {
        edges.extend_from_slice(kg.outgoing(e));
    }
    edges.sort_unstable();

    let mut entities = prev.entities.clone();
    for t in &edges {
        if !member[t.tail.idx()] {
            member[t.tail.idx()] = true;
            entities.push(t.tail);
        }
    }
    Frontier { entities, edges }
}

/// BFS distances over augmented directed edges; `None` marks unreachable.
/// Identity self-loops never shorten a path.
pub fn hop_distances(kg: &KnowledgeGraph, source: EntityId) -> Vec<Option<u32>> {
    let mut dist = vec![None; kg.num_entities()];
    dist[source.idx()] = Some(0);
    let mut queue = VecDeque::new();
    queue.push_back(source);
    while let Some(e) = queue.pop_front() {
        let d = dist[e.idx()].expect("queued entity has distance");
        for t in kg.outgoing(e) {
            if dist[t.tail.idx()].is_none() {
                dist[t.tail.idx()] = Some(d + 1);
                queue.push_back(t.tail);
            }
        }
    }
    dist
}

/// Entities to exclude when ranking `target` for the query (head, relation):
/// every other known-true answer of the same query.
pub fn filter_mask(
    query: (EntityId, RelationId),
    target: EntityId,
    all_true: &HashSet<(EntityId, RelationId, EntityId)>,
) -> HashSet<EntityId> {
    all_true
        .iter()
        .filter(|(h, r, o)| *h == query.0 && *r == query.1 && *o != target)
        .map(|(_, _, o)| *o)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_graph() -> KnowledgeGraph {
        // 0 -r-> 1 -r-> 2
        let mut vocab = Vocabulary::new();
        for name in ["a", "b", "c"] {
            vocab.add_entity(name).unwrap();
        }
        vocab.add_relation("r").unwrap();
        KnowledgeGraph::augment(&[Triple::new(0, 0, 1), Triple::new(1, 0, 2)], vocab).unwrap()
    }

    #[test]
    fn augment_counts_base_inverse_identity() {
        let kg = chain_graph();
        // 2 base + 2 inverse + 3 identity
        assert_eq!(kg.num_triples(), 7);
        assert_eq!(kg.augmented_relation_count(), 3);
        assert_eq!(kg.identity_relation(), RelationId(2));
    }

    #[test]
    fn augment_zero_triples_single_entity() {
        let mut vocab = Vocabulary::new();
        vocab.add_entity("only").unwrap();
        let kg = KnowledgeGraph::augment(&[], vocab).unwrap();
        assert_eq!(kg.num_triples(), 1);
        assert_eq!(kg.triples()[0], Triple::new(0, 0, 0));
    }

    #[test]
    fn every_base_triple_has_inverse() {
        let kg = chain_graph();
        let base = kg.base_relation_count() as u32;
        for t in kg.base_triples() {
            let inv = Triple {
                head: t.tail,
                relation: RelationId(t.relation.0 + base),
                tail: t.head,
            };
            assert!(kg.triples().contains(&inv));
        }
    }

    #[test]
    fn augmentation_involution_recovers_base_multiset() {
        let kg = chain_graph();
        let base = kg.base_relation_count();
        let mut from_inverses: Vec<Triple> = kg
            .triples()
            .iter()
            .filter(|t| (base..2 * base).contains(&t.relation.idx()))
            .map(|t| Triple {
                head: t.tail,
                relation: RelationId((t.relation.idx() - base) as u32),
                tail: t.head,
            })
            .collect();
        from_inverses.sort_unstable();
        let mut want = kg.base_triples();
        want.sort_unstable();
        assert_eq!(from_inverses, want);
    }

    #[test]
    fn adjacency_enumerates_exactly_head_matches() {
        let kg = chain_graph();
        for e in 0..kg.num_entities() {
            let ent = EntityId(e as u32);
            let from_adj: Vec<_> = kg.outgoing(ent).to_vec();
            let scanned: Vec<_> = kg
                .triples()
                .iter()
                .filter(|t| t.head == ent)
                .copied()
                .collect();
            assert_eq!(from_adj, scanned);
        }
    }

    #[test]
    fn expand_frontier_one_hop() {
        let kg = chain_graph();
        let f1 = expand_frontier(&kg, &Frontier::seed(EntityId(0)));
        assert_eq!(f1.entities, vec![EntityId(0), EntityId(1)]);
        assert!(f1.edges.contains(&Triple::new(0, 0, 1)));
        assert!(f1.edges.contains(&Triple::new(0, 2, 0)));
        assert_eq!(f1.edges.len(), 2);
    }

    #[test]
    fn expand_frontier_isolated_entity_survives_via_identity() {
        let mut vocab = Vocabulary::new();
        vocab.add_entity("alone").unwrap();
        vocab.add_entity("pair1").unwrap();
        vocab.add_entity("pair2").unwrap();
        vocab.add_relation("r").unwrap();
        let kg = KnowledgeGraph::augment(&[Triple::new(1, 0, 2)], vocab).unwrap();
        let f1 = expand_frontier(&kg, &Frontier::seed(EntityId(0)));
        assert_eq!(f1.entities, vec![EntityId(0)]);
        assert_eq!(f1.edges, vec![Triple::new(0, 2, 0)]);
    }

    #[test]
    fn frontier_matches_bfs_reach_on_toy_graph() {
        // Mirrors an in-law style toy: reach the two-hop answer in two steps.
        let mut vocab = Vocabulary::new();
        for name in ["andrew", "sarah", "ethan", "mia", "lily"] {
            vocab.add_entity(name).unwrap();
        }
        for rel in ["r1", "r2", "r3"] {
            vocab.add_relation(rel).unwrap();
        }
        let base = vec![
            Triple::new(0, 1, 1), // andrew -r2-> sarah
            Triple::new(1, 0, 3), // sarah -r1-> mia
            Triple::new(0, 0, 2), // andrew -r1-> ethan
            Triple::new(2, 2, 4), // ethan -r3-> lily
        ];
        let kg = KnowledgeGraph::augment(&base, vocab.clone()).unwrap();
        let mut frontier = Frontier::seed(EntityId(0));
        let dist = hop_distances(&kg, EntityId(0));
        for i in 1..=3 {
            frontier = expand_frontier(&kg, &frontier);
            let mut reached: Vec<_> = frontier.entities.iter().map(|e| e.idx()).collect();
            reached.sort_unstable();
            let mut bfs: Vec<_> = dist
                .iter()
                .enumerate()
                .filter(|(_, d)| matches!(d, Some(x) if *x <= i))
                .map(|(e, _)| e)
                .collect();
            bfs.sort_unstable();
            assert_eq!(reached, bfs, "layer {i}");
        }
        let mia = vocab.entity("mia").unwrap();
        assert_eq!(dist[mia.idx()], Some(2));
        assert!(frontier.entities.contains(&mia));
    }

    #[test]
    fn hop_distance_examples() {
        let kg = chain_graph();
        let d = hop_distances(&kg, EntityId(0));
        assert_eq!(d[0], Some(0));
        assert_eq!(d[1], Some(1));
        assert_eq!(d[2], Some(2));
    }

    #[test]
    fn filter_mask_examples() {
        let mut all_true = HashSet::new();
        let q = (EntityId(0), RelationId(0));
        all_true.insert((q.0, q.1, EntityId(1)));
        assert!(filter_mask(q, EntityId(1), &all_true).is_empty());

        all_true.insert((q.0, q.1, EntityId(2)));
        let mask = filter_mask(q, EntityId(1), &all_true);
        assert_eq!(mask.len(), 1);
        assert!(mask.contains(&EntityId(2)));
        assert!(!mask.contains(&EntityId(1)));
    }
}
