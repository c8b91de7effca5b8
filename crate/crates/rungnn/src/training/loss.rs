//! Multi-class log-loss over the full vocabulary: for each positive answer
//! o of a query, −score(o) + log Σ_{o'∈V} exp(score(o')), where unreached
//! entities contribute exp(0) to the normalizer and a zero positive score.

use std::collections::HashSet;
use std::rc::Rc;

use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::model::{encode, score_on_tape, EncodeOptions, Encoding, Model};
use crate::numerics::{Scalar, Tape, ValueId};

use super::{QueryGroup, TrainError};

/// Plain-value loss over a dense score vector; the reference semantics the
/// tape path must match. Stabilized by max subtraction.
pub fn multiclass_log_loss(scores: &[f64], answers: &[EntityId]) -> Result<f64, TrainError> {
    if answers.is_empty() {
        return Err(TrainError::EmptyAnswers);
    }
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    Ok(answers
        .iter()
        .map(|o| -scores[o.idx()] + lse)
        .sum())
}

/// Record one query group's loss on the tape: encode once, score the
/// reached entities, and charge every answer against the full-vocabulary
/// normalizer (unreached entities enter at score exactly zero).
pub fn group_loss_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    model: &Model<T>,
    kg: &KnowledgeGraph,
    group: &QueryGroup,
    exclude_query_edges: bool,
) -> Result<(ValueId, Encoding), TrainError> {
    if group.answers.is_empty() {
        return Err(TrainError::EmptyAnswers);
    }
    let mut opts = EncodeOptions::default();
    if exclude_query_edges {
        opts.excluded = query_edge_exclusions(kg, group);
    }
    let encoding = encode(tape, model, kg, group.head, group.relation, &opts)?;
    let scores = score_on_tape(tape, model, &encoding)?;

    let reached = encoding.entities.len();
    let unreached = kg.num_entities() - reached;
    let lse = tape.logsumexp_with_zeros(scores, unreached)?;

    // Positive scores: only reached answers contribute (an unreached answer
    // scores exactly zero, so its −score term vanishes).
    let mut answer_rows: Vec<Option<usize>> = Vec::new();
    let row_of: std::collections::HashMap<EntityId, usize> = encoding
        .entities
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, i))
        .collect();
    for &o in &group.answers {
        if let Some(&r) = row_of.get(&o) {
            answer_rows.push(Some(r));
        }
    }
    let total_lse = tape.scale_const(lse, T::from_f64(group.answers.len() as f64))?;
    let loss = if answer_rows.is_empty() {
        total_lse
    } else {
        let picked = tape.gather_rows(scores, Rc::new(answer_rows))?;
        let positives = tape.sum_all(picked)?;
        tape.sub(total_lse, positives)?
    };
    Ok((loss, encoding))
}

/// The answer edges of a query group plus their inverses: what training
/// hides from the group's own subgraph.
pub fn query_edge_exclusions(kg: &KnowledgeGraph, group: &QueryGroup) -> HashSet<Triple> {
    let mut excluded = HashSet::with_capacity(2 * group.answers.len());
    for &o in &group.answers {
        excluded.insert(Triple {
            head: group.head,
            relation: group.relation,
            tail: o,
        });
        excluded.insert(Triple {
            head: o,
            relation: kg.inverse_relation(group.relation),
            tail: group.head,
        });
    }
    excluded
}
