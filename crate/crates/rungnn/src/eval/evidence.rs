//! Evidence-path extraction: walk attention backwards from a predicted
//! answer to recover the high-weight relational paths the encoder relied
//! on.

use std::collections::HashMap;

use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::model::{encode, EncodeOptions, Model};
use crate::numerics::{Scalar, Tape};

use super::EvalError;

/// One extracted path from the query head to the answer: consecutive
/// triples chain head→tail, identity hops are elided, and the score is the
/// product of the traversed attention weights (identity hops included).
#[derive(Debug, Clone, PartialEq)]
pub struct EvidencePath {
    pub triples: Vec<Triple>,
    pub weights: Vec<f64>,
    pub score: f64,
}

/// Extraction result; `answer_reached` explains an empty path list.
#[derive(Debug, Clone)]
pub struct EvidenceOutcome {
    pub answer_reached: bool,
    pub paths: Vec<EvidencePath>,
}

/// Beam search backwards through the per-layer attention records: at each
/// layer, extend every beam state by its incoming edges (heads must have
/// been reached before that layer) and keep the `beam_width`
/// highest-scoring states. Paths are reported best first.
pub fn extract_evidence_paths<T: Scalar>(
    model: &Model<T>,
    kg: &KnowledgeGraph,
    head: EntityId,
    relation: RelationId,
    answer: EntityId,
    beam_width: usize,
) -> Result<EvidenceOutcome, EvalError> {
    let mut tape = Tape::new();
    let encoding = encode(
        &mut tape,
        model,
        kg,
        head,
        relation,
        &EncodeOptions {
            trace_attention: true,
            ..Default::default()
        },
    )?;
    drop(tape);
    if !encoding.entities.contains(&answer) {
        return Ok(EvidenceOutcome {
            answer_reached: false,
            paths: Vec::new(),
        });
    }

    #[derive(Clone)]
    struct Beam {
        at: EntityId,
        // Traversed real edges, answer-side first.
        rev_triples: Vec<(Triple, f64)>,
        score: f64,
    }

    let identity = kg.identity_relation();
    let mut beams = vec![Beam {
        at: answer,
        rev_triples: Vec::new(),
        score: 1.0,
    }];

    for layer in encoding.attention.iter().rev() {
        // Incoming-edge index for this layer.
        let mut incoming: HashMap<EntityId, Vec<usize>> = HashMap::new();
        for (i, t) in layer.edges.iter().enumerate() {
            incoming.entry(t.tail).or_default().push(i);
        }
        let mut extended: Vec<Beam> = Vec::new();
        for beam in &beams {
            for &edge_idx in incoming.get(&beam.at).map(Vec::as_slice).unwrap_or(&[]) {
                let edge = layer.edges[edge_idx];
                if !layer.prev_entities.contains(&edge.head) {
                    continue;
                }
                let weight = layer.weights[edge_idx];
                let mut next = beam.clone();
                next.at = edge.head;
                next.score *= weight;
                if edge.relation != identity {
                    next.rev_triples.push((edge, weight));
                }
                extended.push(next);
            }
        }
        // Deterministic order: score descending, then position for ties.
        extended.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("finite scores")
                .then_with(|| a.at.cmp(&b.at))
        });
        extended.truncate(beam_width.max(1));
        beams = extended;
        if beams.is_empty() {
            break;
        }
    }

    // Every surviving beam walked back to the source; convert and dedup,
    // keeping the best score per distinct relational path.
    let mut best: HashMap<Vec<Triple>, EvidencePath> = HashMap::new();
    for beam in beams {
        debug_assert_eq!(beam.at, head, "beam must terminate at the query head");
        let mut triples: Vec<Triple> = Vec::with_capacity(beam.rev_triples.len());
        let mut weights = Vec::with_capacity(beam.rev_triples.len());
        for (t, w) in beam.rev_triples.iter().rev() {
            triples.push(*t);
            weights.push(*w);
        }
        let entry = best.entry(triples.clone()).or_insert(EvidencePath {
            triples,
            weights,
            score: beam.score,
        });
        if beam.score > entry.score {
            entry.score = beam.score;
        }
    }
    let mut paths: Vec<EvidencePath> = best.into_values().collect();
    paths.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then_with(|| a.triples.cmp(&b.triples))
    });
    Ok(EvidenceOutcome {
        answer_reached: true,
        paths,
    })
}
