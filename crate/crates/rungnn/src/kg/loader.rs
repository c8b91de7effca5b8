//! Triple-file parsing and dataset-directory loading.
//!
//! File format: UTF-8 text, one `head<TAB>relation<TAB>tail` per line,
//! lines starting with `#` ignored. A dataset directory holds train.txt,
//! valid.txt and test.txt; inductive datasets add a sibling directory with
//! its own train.txt (facts) and test.txt (predictions).

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::graph::{EntityId, KnowledgeGraph, RelationId, Triple, Vocabulary};
use super::KgError;

/// A link-prediction query with its known answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Query {
    pub head: EntityId,
    pub relation: RelationId,
    pub answer: EntityId,
}

/// Parse a triple file in base relation space.
///
/// With `frozen` unset, unseen names extend the vocabulary in first-seen
/// order, so re-parsing the same file yields identical indices. With
/// `frozen` set (inductive predict files must reuse the fact vocabulary),
/// unknown names are an error.
pub fn load_triples(
    path: &Path,
    vocab: &mut Vocabulary,
    frozen: bool,
) -> Result<Vec<Triple>, KgError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| KgError::Io {
        path: display.clone(),
        source,
    })?;
    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let (Some(h), Some(r), Some(t), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(KgError::MalformedLine {
                path: display.clone(),
                line: line_no,
            });
        };
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(KgError::MalformedLine {
                path: display.clone(),
                line: line_no,
            });
        }
        let head = resolve_entity(vocab, h, frozen, &display, line_no)?;
        let relation = resolve_relation(vocab, r, frozen, &display, line_no)?;
        let tail = resolve_entity(vocab, t, frozen, &display, line_no)?;
        let triple = Triple {
            head,
            relation,
            tail,
        };
        // Duplicate base triples carry no extra meaning; keep the first.
        if seen.insert(triple) {
            triples.push(triple);
        }
    }
    Ok(triples)
}

fn resolve_entity(
    vocab: &mut Vocabulary,
    name: &str,
    frozen: bool,
    path: &str,
    line: usize,
) -> Result<EntityId, KgError> {
    if frozen {
        vocab.entity(name).ok_or_else(|| KgError::UnknownName {
            path: path.to_string(),
            line,
            kind: "entity",
            name: name.to_string(),
        })
    } else {
        Ok(vocab.entity_or_insert(name))
    }
}

fn resolve_relation(
    vocab: &mut Vocabulary,
    name: &str,
    frozen: bool,
    path: &str,
    line: usize,
) -> Result<RelationId, KgError> {
    if frozen {
        vocab.relation(name).ok_or_else(|| KgError::UnknownName {
            path: path.to_string(),
            line,
            kind: "relation",
            name: name.to_string(),
        })
    } else {
        Ok(vocab.relation_or_insert(name))
    }
}

/// Write base-space triples in the same file format, preserving order.
pub fn write_triples(path: &Path, triples: &[Triple], vocab: &Vocabulary) -> Result<(), KgError> {
    let display = path.display().to_string();
    let mut out = fs::File::create(path).map_err(|source| KgError::Io {
        path: display.clone(),
        source,
    })?;
    for t in triples {
        writeln!(
            out,
            "{}\t{}\t{}",
            vocab.entity_name(t.head),
            vocab.base_relation_name(t.relation.idx()),
            vocab.entity_name(t.tail)
        )
        .map_err(|source| KgError::Io {
            path: display.clone(),
            source,
        })?;
    }
    Ok(())
}

/// Message-passing graph plus query splits and the filtering index.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub fact_graph: KnowledgeGraph,
    pub train_queries: Vec<Query>,
    pub valid_queries: Vec<Query>,
    pub test_queries: Vec<Query>,
    /// Known-true answers per (head, relation) across all splits, over the
    /// augmented relation space (inverse queries included).
    answers: HashMap<(EntityId, RelationId), Vec<EntityId>>,
}

impl DatasetSplit {
    pub fn new(
        fact_graph: KnowledgeGraph,
        train_queries: Vec<Query>,
        valid_queries: Vec<Query>,
        test_queries: Vec<Query>,
    ) -> Self {
        let base = fact_graph.base_relation_count() as u32;
        let mut answers: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
        for q in train_queries
            .iter()
            .chain(valid_queries.iter())
            .chain(test_queries.iter())
        {
            answers
                .entry((q.head, q.relation))
                .or_default()
                .push(q.answer);
            answers
                .entry((q.answer, RelationId(q.relation.0 + base)))
                .or_default()
                .push(q.head);
        }
        for v in answers.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        DatasetSplit {
            fact_graph,
            train_queries,
            valid_queries,
            test_queries,
            answers,
        }
    }

    /// All known-true answers of a query, in ascending entity order.
    pub fn known_answers(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.answers
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Set of all known-true (head, relation, tail), augmented space.
    pub fn all_true(&self) -> HashSet<(EntityId, RelationId, EntityId)> {
        let mut set = HashSet::new();
        for ((h, r), tails) in &self.answers {
            for t in tails {
                set.insert((*h, *r, *t));
            }
        }
        set
    }
}

fn queries_from(triples: &[Triple]) -> Vec<Query> {
    triples
        .iter()
        .map(|t| Query {
            head: t.head,
            relation: t.relation,
            answer: t.tail,
        })
        .collect()
}

/// Load a transductive dataset directory (train.txt, valid.txt, test.txt).
/// All splits share one vocabulary; the fact graph is built from train only.
pub fn load_dataset_dir(dir: &Path) -> Result<DatasetSplit, KgError> {
    let mut vocab = Vocabulary::new();
    let read = |name: &str, vocab: &mut Vocabulary, frozen: bool| {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(KgError::MissingFile(path.display().to_string()));
        }
        load_triples(&path, vocab, frozen)
    };
    let train = read("train.txt", &mut vocab, false)?;
    // Valid/test may introduce entities unseen in training facts; extend the
    // vocabulary so they can at least be ranked.
    let valid = read("valid.txt", &mut vocab, false)?;
    let test = read("test.txt", &mut vocab, false)?;
    let fact_graph = KnowledgeGraph::augment(&train, vocab)?;
    Ok(DatasetSplit::new(
        fact_graph,
        queries_from(&train),
        queries_from(&valid),
        queries_from(&test),
    ))
}

/// Load an inductive dataset: `train_dir` provides the training split
/// (facts + queries from its own files), `test_dir` provides a disjoint
/// entity vocabulary with train.txt as facts and test.txt as predictions
/// over the shared relation vocabulary.
pub fn load_inductive_dataset(
    train_dir: &Path,
    test_dir: &Path,
) -> Result<(DatasetSplit, DatasetSplit), KgError> {
    let train_split = load_dataset_dir(train_dir)?;

    // Relations transfer; entities do not.
    let mut test_vocab = Vocabulary::new();
    for r in train_split.fact_graph.vocab().relation_names() {
        test_vocab.add_relation(r)?;
    }
    let fact_path = test_dir.join("train.txt");
    if !fact_path.is_file() {
        return Err(KgError::MissingFile(fact_path.display().to_string()));
    }
    let facts = load_triples(&fact_path, &mut test_vocab, false)?;

    let predict_path = test_dir.join("test.txt");
    if !predict_path.is_file() {
        return Err(KgError::MissingFile(predict_path.display().to_string()));
    }
    // Prediction files must reuse the fact vocabulary.
    let predictions = load_triples(&predict_path, &mut test_vocab, true)?;

    let fact_graph = KnowledgeGraph::augment(&facts, test_vocab)?;
    let test_split = DatasetSplit::new(
        fact_graph,
        queries_from(&facts),
        Vec::new(),
        queries_from(&predictions),
    );
    Ok((train_split, test_split))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &Path, name: &str, content: &str) {
        let mut f = fs::File::create(dir.join(name)).unwrap();
        f.write_all(content.as_bytes()).unwrap();
    }

    #[test]
    fn parses_two_triples_three_entities_one_relation() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "a\tr\tb\nb\tr\tc\n");
        let mut vocab = Vocabulary::new();
        let triples = load_triples(&dir.path().join("t.txt"), &mut vocab, false).unwrap();
        assert_eq!(triples.len(), 2);
        assert_eq!(vocab.num_entities(), 3);
        assert_eq!(vocab.num_relations(), 1);
        assert_eq!(triples[0], Triple::new(0, 0, 1));
    }

    #[test]
    fn empty_file_leaves_vocab_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "");
        let mut vocab = Vocabulary::new();
        vocab.add_entity("pre").unwrap();
        let triples = load_triples(&dir.path().join("t.txt"), &mut vocab, false).unwrap();
        assert!(triples.is_empty());
        assert_eq!(vocab.num_entities(), 1);
    }

    #[test]
    fn reparse_yields_identical_indices() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "x\tr\ty\n# comment\nz\ts\tx\n");
        let mut v1 = Vocabulary::new();
        let t1 = load_triples(&dir.path().join("t.txt"), &mut v1, false).unwrap();
        let mut v2 = Vocabulary::new();
        let t2 = load_triples(&dir.path().join("t.txt"), &mut v2, false).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1.entity_names(), v2.entity_names());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "a\tr\tb\nbroken line\n");
        let mut vocab = Vocabulary::new();
        let err = load_triples(&dir.path().join("t.txt"), &mut vocab, false).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn frozen_vocab_rejects_unknown_entity() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "a\tr\tb\n");
        let mut vocab = Vocabulary::new();
        vocab.add_entity("a").unwrap();
        vocab.add_relation("r").unwrap();
        let err = load_triples(&dir.path().join("t.txt"), &mut vocab, true).unwrap_err();
        assert!(matches!(err, KgError::UnknownName { kind: "entity", .. }), "{err}");
    }

    #[test]
    fn duplicate_base_triples_are_deduplicated() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "a\tr\tb\na\tr\tb\n");
        let mut vocab = Vocabulary::new();
        let triples = load_triples(&dir.path().join("t.txt"), &mut vocab, false).unwrap();
        assert_eq!(triples.len(), 1);
    }

    #[test]
    fn triple_file_round_trip_preserves_graph() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "t.txt", "a\tr\tb\nb\ts\tc\nc\tr\ta\n");
        let mut vocab = Vocabulary::new();
        let triples = load_triples(&dir.path().join("t.txt"), &mut vocab, false).unwrap();
        let kg = KnowledgeGraph::augment(&triples, vocab).unwrap();

        write_triples(&dir.path().join("round.txt"), &kg.base_triples(), kg.vocab()).unwrap();
        let mut vocab2 = Vocabulary::new();
        let triples2 =
            load_triples(&dir.path().join("round.txt"), &mut vocab2, false).unwrap();
        let kg2 = KnowledgeGraph::augment(&triples2, vocab2).unwrap();
        assert_eq!(kg, kg2);
    }

    #[test]
    fn missing_test_file_is_a_clear_error() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "train.txt", "a\tr\tb\n");
        write_file(dir.path(), "valid.txt", "a\tr\tb\n");
        let err = load_dataset_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("test.txt"), "{err}");
    }

    #[test]
    fn inductive_pair_shares_relations_with_disjoint_entities() {
        let dir = tempfile::tempdir().unwrap();
        let train_dir = dir.path().join("v1_train");
        let test_dir = dir.path().join("v1_test");
        fs::create_dir_all(&train_dir).unwrap();
        fs::create_dir_all(&test_dir).unwrap();
        write_file(&train_dir, "train.txt", "a\tr\tb\nb\ts\tc\n");
        write_file(&train_dir, "valid.txt", "a\ts\tc\n");
        write_file(&train_dir, "test.txt", "c\tr\ta\n");
        write_file(&test_dir, "train.txt", "x\tr\ty\ny\ts\tz\n");
        write_file(&test_dir, "test.txt", "x\ts\tz\n");

        let (train, test) = load_inductive_dataset(&train_dir, &test_dir).unwrap();
        assert_eq!(
            train.fact_graph.vocab().relation_names(),
            test.fact_graph.vocab().relation_names()
        );
        let train_entities: std::collections::HashSet<_> = train
            .fact_graph
            .vocab()
            .entity_names()
            .iter()
            .cloned()
            .collect();
        for e in test.fact_graph.vocab().entity_names() {
            assert!(!train_entities.contains(e), "entity {e} leaked across splits");
        }
        assert_eq!(test.test_queries.len(), 1);
        // Prediction files must not introduce entities beyond the fact set.
        write_file(&test_dir, "test.txt", "x\ts\tunseen\n");
        assert!(load_inductive_dataset(&train_dir, &test_dir).is_err());
    }

    #[test]
    fn filter_mask_never_contains_the_target_on_a_full_split() {
        let data = crate::kg::synthetic::SyntheticSpec::sequential(10, 6).generate();
        let all_true = data.split.all_true();
        for q in data
            .split
            .test_queries
            .iter()
            .chain(data.split.valid_queries.iter())
        {
            let mask =
                crate::kg::filter_mask((q.head, q.relation), q.answer, &all_true);
            assert!(!mask.contains(&q.answer));
        }
    }

    #[test]
    fn split_indexes_inverse_answers_for_filtering() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "train.txt", "a\tr\tb\na\tr\tc\n");
        write_file(dir.path(), "valid.txt", "a\tr\td\n");
        write_file(dir.path(), "test.txt", "e\tr\tb\n");
        let split = load_dataset_dir(dir.path()).unwrap();
        let vocab = split.fact_graph.vocab().clone();
        let a = vocab.entity("a").unwrap();
        let b = vocab.entity("b").unwrap();
        let r = vocab.relation("r").unwrap();
        let answers = split.known_answers(a, r);
        assert_eq!(answers.len(), 3);
        // Inverse direction: (b, r_inv) answers include a and e.
        let r_inv = split.fact_graph.inverse_relation(r);
        let inv = split.known_answers(b, r_inv);
        assert_eq!(inv.len(), 2);
        assert!(inv.contains(&a));
    }
}
