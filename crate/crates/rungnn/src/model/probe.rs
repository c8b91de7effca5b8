//! Relation-path probe: encode an ordered relation sequence in isolation,
//! without any graph, by folding each relation through the message fusion
//! of successive layers. Comparing the encodings of a path and its reverse
//! measures how order-sensitive the trained message function is.

use std::rc::Rc;

use crate::kg::RelationId;
use crate::numerics::{Scalar, Tape};

use super::{MessageKind, Model, ModelError};

/// Fold the relations in order, starting from the zero vector: position p
/// runs through layer min(p, n)'s message function (the deepest exploration
/// layer is reused for positions beyond n). Returns the final d-vector.
pub fn encode_relation_path<T: Scalar>(
    model: &Model<T>,
    relations: &[RelationId],
    query: RelationId,
) -> Result<Vec<T>, ModelError> {
    if relations.is_empty() {
        return Err(ModelError::EmptyPath);
    }
    for r in relations.iter().chain(std::iter::once(&query)) {
        if r.idx() >= model.config.num_relations {
            return Err(ModelError::InvalidRelation(r.idx()));
        }
    }
    let cfg = model.encoder();
    let mut tape = Tape::new();
    let mut state = tape.zeros(1, cfg.d);
    for (pos, &rel) in relations.iter().enumerate() {
        let layer_idx = (pos + 1).min(cfg.n) - 1;
        let layer = &model.params.layers[layer_idx];
        let table = tape.param(&model.store, layer.relation_table);
        let h_r = tape.gather_rows(table, Rc::new(vec![Some(rel.idx())]))?;
        let h_q = tape.gather_rows(table, Rc::new(vec![Some(query.idx())]))?;
        state = match model.config.message {
            MessageKind::Qrfgu => {
                super::qrfgu(&mut tape, &model.store, &layer.message_qrfgu, state, h_r, h_q)?
            }
            MessageKind::Addition => tape.add(state, h_r)?,
            MessageKind::Multiplication => tape.hadamard(state, h_r)?,
        };
    }
    Ok(tape.value(state).data().to_vec())
}
