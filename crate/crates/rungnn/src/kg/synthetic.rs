//! Seeded synthetic family-style knowledge graphs with planted
//! compositional rules, used as training oracles: the generator knows the
//! unique correct answer of every emitted query.
//!
//! Two generators are provided. `SequentialRules` plants two 2-step rules
//! that share the same relations in opposite orders (aunt ← father∘sister,
//! parent ← sister∘father), so answering requires order-aware rule
//! encoding. `Chains` plants father-chain rules of increasing length
//! (grandfather ← father∘father, ...), giving queries whose answers sit a
//! controlled number of hops from the head.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{EntityId, KnowledgeGraph, RelationId, Triple, Vocabulary};
use super::loader::{write_triples, DatasetSplit, Query};
use super::KgError;

pub const REL_FATHER: &str = "father";
pub const REL_SISTER: &str = "sister";
pub const REL_GUARDIAN: &str = "guardian";
pub const REL_AUNT: &str = "aunt";
pub const REL_PARENT: &str = "parent";

/// Which family structure to plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Per unit, one anchor x with a child y_R per base relation R ∈
    /// {father, sister, guardian} and a grandchild z_{R,R'} per ordered
    /// pair of distinct relations, planting all six 2-step rules
    /// (aunt ← father∘sister, parent ← sister∘father, ...). Every query's
    /// answer has a competitor reached by the same two relations in the
    /// opposite order AND a competitor sharing its final relation, so no
    /// single-hop feature identifies the answer; only the relation order
    /// does.
    SequentialRules,
    /// Chain rules whose answers sit `min_hops..=max_hops` hops from the
    /// anchor. Without decoys these are pure father chains (grandfather ←
    /// father∘father, great_grandfather for 3 hops, ...). With decoys each
    /// unit holds two mirror-image candidate chains of the same depth L
    /// (father^(L−1)∘sister), distinguished only by a guardian-path tag
    /// guardian³∘{godfather|neighbor} into the answer's (godfather) or
    /// decoy's (neighbor) parent. The full discriminating walk has length
    /// L+2 > L, so an encoder with n = L exploration layers can only
    /// deliver it to the candidate through extra buffer passes: with m = 0
    /// the two candidates are information-theoretically tied.
    Chains {
        min_hops: usize,
        max_hops: usize,
        decoys: bool,
    },
}

/// Seeded generator configuration; equal specs produce identical datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub kind: SyntheticKind,
    pub units: usize,
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_valid_fraction")]
    pub valid_fraction: f64,
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_valid_fraction() -> f64 {
    0.15
}

/// A planted Horn rule head(x, z) ← body₁(x, y) ∧ body₂(y, z) ∧ ...
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRule {
    pub head: String,
    pub body: Vec<String>,
}

/// Generated dataset plus the ground-truth rules behind it.
///
/// The split keeps fact edges and rule conclusions apart: the fact graph
/// carries only the base relations (so training and held-out units have
/// identical local structure), while conclusions appear exclusively as
/// queries, echoing the fact/predict separation of inductive datasets.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub split: DatasetSplit,
    pub rules: Vec<PlantedRule>,
}

impl SyntheticSpec {
    pub fn sequential(units: usize, seed: u64) -> Self {
        SyntheticSpec {
            kind: SyntheticKind::SequentialRules,
            units,
            seed,
            train_fraction: default_train_fraction(),
            valid_fraction: default_valid_fraction(),
        }
    }

    pub fn chains(units: usize, min_hops: usize, max_hops: usize, decoys: bool, seed: u64) -> Self {
        SyntheticSpec {
            kind: SyntheticKind::Chains {
                min_hops,
                max_hops,
                decoys,
            },
            units,
            seed,
            train_fraction: default_train_fraction(),
            valid_fraction: default_valid_fraction(),
        }
    }

    pub fn generate(&self) -> SyntheticDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut vocab = Vocabulary::new();
        let mut facts: Vec<Triple> = Vec::new();
        // Conclusions per unit, emitted as queries.
        let mut conclusions: Vec<Vec<Triple>> = Vec::new();
        let rules;

        match self.kind {
            SyntheticKind::SequentialRules => {
                let bases = [REL_FATHER, REL_SISTER, REL_GUARDIAN];
                let base_ids: Vec<RelationId> =
                    bases.iter().map(|r| vocab.relation_or_insert(r)).collect();
                // Head relation per ordered pair; father∘sister keeps the
                // kinship reading (father's sister = aunt, sibling's
                // father = parent).
                let head_name = |first: &str, second: &str| -> String {
                    match (first, second) {
                        (REL_FATHER, REL_SISTER) => REL_AUNT.to_string(),
                        (REL_SISTER, REL_FATHER) => REL_PARENT.to_string(),
                        _ => format!("{first}_{second}"),
                    }
                };
                let mut pairs = Vec::new();
                let mut rule_list = Vec::new();
                for (a, &ra) in bases.iter().zip(base_ids.iter()) {
                    for (b, &rb) in bases.iter().zip(base_ids.iter()) {
                        if a == b {
                            continue;
                        }
                        let head = vocab.relation_or_insert(&head_name(a, b));
                        pairs.push((ra, rb, head));
                        rule_list.push(PlantedRule {
                            head: head_name(a, b),
                            body: vec![a.to_string(), b.to_string()],
                        });
                    }
                }
                rules = rule_list;
                for i in 0..self.units {
                    let x = vocab.entity_or_insert(&format!("u{i}_x"));
                    let mids: Vec<EntityId> = bases
                        .iter()
                        .map(|a| vocab.entity_or_insert(&format!("u{i}_y_{a}")))
                        .collect();
                    for (ai, &ra) in base_ids.iter().enumerate() {
                        facts.push(triple(x, ra, mids[ai]));
                    }
                    let mut unit_conclusions = Vec::new();
                    for &(ra, rb, head) in &pairs {
                        let ai = base_ids.iter().position(|&r| r == ra).expect("base");
                        let a = bases[ai];
                        let b = bases[base_ids.iter().position(|&r| r == rb).expect("base")];
                        let z = vocab.entity_or_insert(&format!("u{i}_z_{a}_{b}"));
                        facts.push(triple(mids[ai], rb, z));
                        unit_conclusions.push(triple(x, head, z));
                    }
                    conclusions.push(unit_conclusions);
                }
            }
            SyntheticKind::Chains {
                min_hops,
                max_hops,
                decoys,
            } => {
                let lo = if decoys { 3 } else { 2 };
                assert!(
                    (lo..=4).contains(&min_hops) && min_hops <= max_hops && max_hops <= 4,
                    "chain hops supported in {lo}..=4"
                );
                let father = vocab.relation_or_insert(REL_FATHER);
                let sister = vocab.relation_or_insert(REL_SISTER);
                let (guardian, godfather, neighbor) = if decoys {
                    (
                        Some(vocab.relation_or_insert(REL_GUARDIAN)),
                        Some(vocab.relation_or_insert("godfather")),
                        Some(vocab.relation_or_insert("neighbor")),
                    )
                } else {
                    (None, None, None)
                };
                let heads: Vec<RelationId> = (lo..=4)
                    .map(|l| vocab.relation_or_insert(chain_head_name(l, decoys)))
                    .collect();
                rules = (lo..=4)
                    .map(|l| {
                        let body = if decoys {
                            vec![
                                REL_GUARDIAN.to_string(),
                                REL_GUARDIAN.to_string(),
                                REL_GUARDIAN.to_string(),
                                "godfather".to_string(),
                                REL_SISTER.to_string(),
                            ]
                        } else {
                            vec![REL_FATHER.into(); l]
                        };
                        PlantedRule {
                            head: chain_head_name(l, decoys).into(),
                            body,
                        }
                    })
                    .collect();
                for i in 0..self.units {
                    let len = rng.random_range(min_hops..=max_hops);
                    let x = vocab.entity_or_insert(&format!("u{i}_n0"));
                    if decoys {
                        // Candidate chain: father^(len−1) then sister;
                        // returns (parent of candidate, candidate).
                        let mut candidate_chain = |tag: &str| {
                            let mut prev = x;
                            for j in 1..len {
                                let node = vocab.entity_or_insert(&format!("u{i}_{tag}{j}"));
                                facts.push(triple(prev, father, node));
                                prev = node;
                            }
                            let end = vocab.entity_or_insert(&format!("u{i}_{tag}_end"));
                            facts.push(triple(prev, sister, end));
                            (prev, end)
                        };
                        let (answer_parent, answer) = candidate_chain("a");
                        let (decoy_parent, _decoy) = candidate_chain("b");
                        // Tag paths: three guardian hops, then godfather
                        // into the true parent, neighbor into the decoy's.
                        let mut tag_path = |tag: &str, last: RelationId, target: EntityId| {
                            let mut prev = x;
                            for j in 1..=3 {
                                let node = vocab.entity_or_insert(&format!("u{i}_{tag}{j}"));
                                facts.push(triple(prev, guardian.expect("decoys"), node));
                                prev = node;
                            }
                            facts.push(triple(prev, last, target));
                        };
                        tag_path("c", godfather.expect("decoys"), answer_parent);
                        tag_path("e", neighbor.expect("decoys"), decoy_parent);
                        conclusions.push(vec![triple(x, heads[len - lo], answer)]);
                    } else {
                        let mut prev = x;
                        for j in 1..=len {
                            let node = vocab.entity_or_insert(&format!("u{i}_n{j}"));
                            facts.push(triple(prev, father, node));
                            prev = node;
                        }
                        conclusions.push(vec![triple(x, heads[len - lo], prev)]);
                    }
                }
            }
        }

        // Seeded unit-level split.
        let mut order: Vec<usize> = (0..self.units).collect();
        order.shuffle(&mut rng);
        let n_train = ((self.units as f64) * self.train_fraction).round() as usize;
        let n_valid = ((self.units as f64) * self.valid_fraction).round() as usize;
        let n_valid = n_valid.max(usize::from(self.units > 2));
        let mut train_queries: Vec<Query> = facts.iter().map(|&t| as_query(t)).collect();
        let mut valid_queries = Vec::new();
        let mut test_queries = Vec::new();
        for (pos, &unit) in order.iter().enumerate() {
            for &t in &conclusions[unit] {
                if pos < n_train {
                    train_queries.push(as_query(t));
                } else if pos < n_train + n_valid {
                    valid_queries.push(as_query(t));
                } else {
                    test_queries.push(as_query(t));
                }
            }
        }

        // Only base-relation facts are message-passing edges; conclusions
        // of every unit stay query-only.
        let fact_graph =
            KnowledgeGraph::augment(&facts, vocab).expect("generator indices valid");

        SyntheticDataset {
            split: DatasetSplit::new(fact_graph, train_queries, valid_queries, test_queries),
            rules,
        }
    }

    /// Emit the dataset in the standard triple-file layout.
    pub fn write_files(&self, dir: &Path) -> Result<(), KgError> {
        let data = self.generate();
        let vocab = data.split.fact_graph.vocab();
        let to_triples = |qs: &[Query]| -> Vec<Triple> {
            qs.iter()
                .map(|q| Triple {
                    head: q.head,
                    relation: q.relation,
                    tail: q.answer,
                })
                .collect()
        };
        write_triples(
            &dir.join("train.txt"),
            &to_triples(&data.split.train_queries),
            vocab,
        )?;
        write_triples(
            &dir.join("valid.txt"),
            &to_triples(&data.split.valid_queries),
            vocab,
        )?;
        write_triples(
            &dir.join("test.txt"),
            &to_triples(&data.split.test_queries),
            vocab,
        )?;
        Ok(())
    }
}

fn chain_head_name(len: usize, decoys: bool) -> &'static str {
    match (decoys, len) {
        (false, 2) => "grandfather",
        (false, 3) => "great_grandfather",
        (false, 4) => "great_great_grandfather",
        (true, 3) => "deep_kin3",
        (true, 4) => "deep_kin4",
        _ => unreachable!("chain lengths are 2..=4 (3..=4 with decoys)"),
    }
}

fn triple(h: EntityId, r: RelationId, t: EntityId) -> Triple {
    Triple {
        head: h,
        relation: r,
        tail: t,
    }
}

fn as_query(t: Triple) -> Query {
    Query {
        head: t.head,
        relation: t.relation,
        answer: t.tail,
    }
}

/// Brute-force rule matcher: all entities reachable from `head` by
/// following exactly the body relations in order. This is the generator's
/// independent oracle for the correct answer set of a planted-rule query.
pub fn rule_matches(kg: &KnowledgeGraph, head: EntityId, body: &[RelationId]) -> Vec<EntityId> {
    let mut current: HashSet<EntityId> = HashSet::from([head]);
    for &rel in body {
        let mut next = HashSet::new();
        for &e in &current {
            for t in kg.outgoing(e) {
                if t.relation == rel {
                    next.insert(t.tail);
                }
            }
        }
        current = next;
    }
    let mut out: Vec<EntityId> = current.into_iter().collect();
    out.sort_unstable();
    out
}

/// Test queries whose planted rule body, applied in SWAPPED order from the
/// same head, reaches at least one entity that is not a true answer: the
/// queries where an order-blind encoder has a competing wrong candidate.
pub fn order_discriminating_test_queries(data: &SyntheticDataset) -> Vec<Query> {
    let kg = &data.split.fact_graph;
    let vocab = kg.vocab();
    data.split
        .test_queries
        .iter()
        .filter(|q| {
            let Some(rule) = data
                .rules
                .iter()
                .find(|r| vocab.relation(&r.head) == Some(q.relation))
            else {
                return false;
            };
            if rule.body.len() != 2 || rule.body[0] == rule.body[1] {
                return false;
            }
            let swapped: Vec<RelationId> = rule
                .body
                .iter()
                .rev()
                .map(|name| vocab.relation(name).expect("rule relation exists"))
                .collect();
            let truth: HashSet<EntityId> =
                data.split.known_answers(q.head, q.relation).iter().copied().collect();
            rule_matches(kg, q.head, &swapped)
                .into_iter()
                .any(|e| !truth.contains(&e))
        })
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::sequential(12, 7);
        let a = spec.generate();
        let b = spec.generate();
        assert_eq!(a.split.fact_graph, b.split.fact_graph);
        assert_eq!(a.split.test_queries, b.split.test_queries);
    }

    #[test]
    fn different_seeds_change_the_split() {
        let a = SyntheticSpec::sequential(20, 1).generate();
        let b = SyntheticSpec::sequential(20, 2).generate();
        assert_eq!(a.split.fact_graph.num_entities(), b.split.fact_graph.num_entities());
        assert_ne!(a.split.test_queries, b.split.test_queries);
    }

    #[test]
    fn planted_rule_oracle_finds_unique_answers() {
        let data = SyntheticSpec::sequential(10, 3).generate();
        let kg = &data.split.fact_graph;
        let vocab = kg.vocab();
        for q in data
            .split
            .test_queries
            .iter()
            .chain(data.split.valid_queries.iter())
        {
            let rule = data
                .rules
                .iter()
                .find(|r| vocab.relation(&r.head) == Some(q.relation))
                .expect("every conclusion has a rule");
            let body: Vec<RelationId> = rule
                .body
                .iter()
                .map(|n| vocab.relation(n).unwrap())
                .collect();
            let matches = rule_matches(kg, q.head, &body);
            assert_eq!(matches, vec![q.answer], "rule {} answer", rule.head);
        }
    }

    #[test]
    fn sequential_units_are_all_order_discriminating() {
        let data = SyntheticSpec::sequential(16, 5).generate();
        let disc = order_discriminating_test_queries(&data);
        assert_eq!(disc.len(), data.split.test_queries.len());
        assert!(!disc.is_empty());
    }

    #[test]
    fn plain_chains_place_answers_at_body_length_distance() {
        let data = SyntheticSpec::chains(12, 2, 4, false, 11).generate();
        let kg = &data.split.fact_graph;
        let vocab = kg.vocab();
        for q in &data.split.test_queries {
            let rule = data
                .rules
                .iter()
                .find(|r| vocab.relation(&r.head) == Some(q.relation))
                .unwrap();
            let dist = super::super::graph::hop_distances(kg, q.head);
            assert_eq!(dist[q.answer.idx()], Some(rule.body.len() as u32));
        }
    }

    #[test]
    fn lag_chains_put_answers_closer_than_their_rule_walk() {
        // The tag walk (the planted rule body) is longer than the answer's
        // BFS depth: that gap is what buffer passes close.
        let data = SyntheticSpec::chains(12, 3, 4, true, 11).generate();
        let kg = &data.split.fact_graph;
        let vocab = kg.vocab();
        for q in &data.split.test_queries {
            let rule = data
                .rules
                .iter()
                .find(|r| vocab.relation(&r.head) == Some(q.relation))
                .unwrap();
            assert_eq!(rule.body.len(), 5);
            let dist = super::super::graph::hop_distances(kg, q.head)[q.answer.idx()];
            let depth = if rule.head.ends_with('3') { 3 } else { 4 };
            assert_eq!(dist, Some(depth));
        }
    }

    #[test]
    fn emitted_files_reload_with_matching_queries() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec::sequential(9, 4);
        spec.write_files(dir.path()).unwrap();
        let loaded = super::super::loader::load_dataset_dir(dir.path()).unwrap();
        let direct = spec.generate();
        assert_eq!(loaded.test_queries.len(), direct.split.test_queries.len());
        assert_eq!(loaded.valid_queries.len(), direct.split.valid_queries.len());
        assert_eq!(loaded.train_queries.len(), direct.split.train_queries.len());
        // The file layout follows the standard convention where every
        // train triple is also a message-passing edge, so the reloaded
        // graph gains the train-unit conclusion edges (plus inverses).
        let conclusion_edges = loaded
            .train_queries
            .len()
            .saturating_sub(direct.split.fact_graph.base_triples().len());
        assert_eq!(
            loaded.fact_graph.num_triples(),
            direct.split.fact_graph.num_triples() + 2 * conclusion_edges
        );
    }
}
