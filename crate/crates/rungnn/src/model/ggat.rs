//! One gated graph attention layer, split into its four stages: per-edge
//! message fusion, per-target attention, weighted aggregation, and the gated
//! state update.
//!
//! Messages depend only on (head, relation), so edges sharing that pair are
//! deduplicated into "slots": the expensive matrix products run once per
//! slot and per-edge values are row gathers. The per-target softmax and sum
//! still run over the full edge list, keeping the layer's semantics exactly
//! one message per edge.

use std::collections::HashMap;
use std::rc::Rc;

use crate::kg::{EntityId, RelationId, Triple};
use crate::numerics::{ParamStore, Scalar, Tape, ValueId};

use super::{GgatLayerParams, MessageKind, ModelError, Phi, QrfguParams};

/// Entity states over an explicit row ordering.
pub struct LayerStates {
    pub entities: Vec<EntityId>,
    rows: HashMap<EntityId, usize>,
    pub states: ValueId,
}

impl LayerStates {
    pub fn new(entities: Vec<EntityId>, states: ValueId) -> Self {
        let rows = entities
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        LayerStates {
            entities,
            rows,
            states,
        }
    }

    pub fn row(&self, e: EntityId) -> Option<usize> {
        self.rows.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

/// Index structure for one layer's active edges: slot deduplication by
/// (head, relation), plus the target entity ordering (previous entities
/// first, new tails in sorted-edge appearance order).
pub struct EdgeBatch {
    pub edges: Vec<Triple>,
    /// Per slot: row of the head in the previous states, and relation index.
    slot_head_row: Rc<Vec<Option<usize>>>,
    slot_relation: Rc<Vec<Option<usize>>>,
    /// Per edge: its slot.
    edge_slot: Rc<Vec<Option<usize>>>,
    /// Target ordering for this layer (the new reached-entity list).
    pub target_entities: Vec<EntityId>,
    /// Per edge: row of its tail in `target_entities`.
    edge_target: Rc<Vec<usize>>,
    /// Per target row: row in the previous ordering, None for newly reached.
    target_prev_row: Rc<Vec<Option<usize>>>,
}

impl EdgeBatch {
    /// Build from edges sorted by (head, relation, tail); every edge head
    /// must be present in `prev`.
    pub fn build(edges: Vec<Triple>, prev: &LayerStates) -> Result<Self, ModelError> {
        let mut slot_head_row = Vec::new();
        let mut slot_relation = Vec::new();
        let mut edge_slot = Vec::with_capacity(edges.len());
        let mut last: Option<(EntityId, RelationId)> = None;
        for t in &edges {
            let head_row = prev
                .row(t.head)
                .ok_or(ModelError::MissingHeadState(t.head.idx()))?;
            if last != Some((t.head, t.relation)) {
                slot_head_row.push(Some(head_row));
                slot_relation.push(Some(t.relation.idx()));
                last = Some((t.head, t.relation));
            }
            edge_slot.push(Some(slot_head_row.len() - 1));
        }

        let mut target_entities = prev.entities.clone();
        let mut target_rows: HashMap<EntityId, usize> = prev
            .entities
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        for t in &edges {
            if let std::collections::hash_map::Entry::Vacant(slot) = target_rows.entry(t.tail) {
                slot.insert(target_entities.len());
                target_entities.push(t.tail);
            }
        }
        let edge_target = edges.iter().map(|t| target_rows[&t.tail]).collect();
        let target_prev_row = target_entities.iter().map(|e| prev.row(*e)).collect();

        Ok(EdgeBatch {
            edges,
            slot_head_row: Rc::new(slot_head_row),
            slot_relation: Rc::new(slot_relation),
            edge_slot: Rc::new(edge_slot),
            target_entities,
            edge_target: Rc::new(edge_target),
            target_prev_row: Rc::new(target_prev_row),
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_targets(&self) -> usize {
        self.target_entities.len()
    }

    fn num_slots(&self) -> usize {
        self.slot_head_row.len()
    }
}

/// Per-edge candidate rule messages for one layer.
pub struct Messages {
    /// One fused vector per (head, relation) slot, [S×d].
    pub slot_values: ValueId,
    /// One message per edge, [E×d], gathered from the slot values.
    pub edge_values: ValueId,
    /// This layer's query relation embedding, [1×d].
    pub h_q: ValueId,
}

/// Fuse head state and relation embedding into a message per edge,
/// conditioned on the query relation. The gated-unit message reads
/// m = fuse(h_s, h_r, h_q); the ablation variants use h_s + h_r or
/// h_s ⊙ h_r, ignoring the query.
pub fn compute_messages<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    layer: &GgatLayerParams,
    kind: MessageKind,
    batch: &EdgeBatch,
    prev: &LayerStates,
    query: RelationId,
) -> Result<Messages, ModelError> {
    let d = tape.value(prev.states).cols();
    let rel_table = tape.param(store, layer.relation_table);
    let h_q = tape.gather_rows(rel_table, Rc::new(vec![Some(query.idx())]))?;

    let slot_hs = tape.gather_rows(prev.states, Rc::clone(&batch.slot_head_row))?;
    let slot_hr = tape.gather_rows(rel_table, Rc::clone(&batch.slot_relation))?;

    let slot_values = match kind {
        MessageKind::Addition => tape.add(slot_hs, slot_hr)?,
        MessageKind::Multiplication => tape.hadamard(slot_hs, slot_hr)?,
        MessageKind::Qrfgu => {
            let p = &layer.message_qrfgu;
            let pre_u = gate_preactivation(tape, store, p.w_u, p.b_u, d, prev, rel_table, h_q, batch)?;
            let g_u = tape.sigmoid(pre_u)?;
            let pre_f = gate_preactivation(tape, store, p.w_f, p.b_f, d, prev, rel_table, h_q, batch)?;
            let g_f = tape.sigmoid(pre_f)?;

            let w_c = tape.param(store, p.w_c);
            let b_c = tape.param(store, p.b_c);
            let kept = tape.hadamard(g_f, slot_hs)?;
            let fuse_in = tape.add(slot_hr, kept)?;
            let pre_c = tape.matmul_nt(fuse_in, w_c)?;
            let pre_c = tape.add_row(pre_c, b_c)?;
            let h_c = tape.tanh(pre_c)?;

            let ones = tape.ones(batch.num_slots(), d);
            let retain = tape.sub(ones, g_u)?;
            let old_part = tape.hadamard(retain, slot_hs)?;
            let new_part = tape.hadamard(g_u, h_c)?;
            tape.add(old_part, new_part)?
        }
    };
    let edge_values = tape.gather_rows(slot_values, Rc::clone(&batch.edge_slot))?;
    Ok(Messages {
        slot_values,
        edge_values,
        h_q,
    })
}

/// Factored gate pre-activation σ-input: with W split column-wise into
/// blocks over [h_rule, h_msg, h_q], the rule block is applied once per
/// previous entity, the msg block once per relation, and the query block
/// once, then combined per slot by row gathers. Equal to W·[h_s, h_r, h_q]
/// + b up to float re-association.
#[allow(clippy::too_many_arguments)]
fn gate_preactivation<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    w: crate::numerics::ParamId,
    b: crate::numerics::ParamId,
    d: usize,
    prev: &LayerStates,
    rel_table: ValueId,
    h_q: ValueId,
    batch: &EdgeBatch,
) -> Result<ValueId, ModelError> {
    let w = tape.param(store, w);
    let b = tape.param(store, b);
    let w_rule = tape.slice_cols(w, 0, d)?;
    let w_msg = tape.slice_cols(w, d, 2 * d)?;
    let w_query = tape.slice_cols(w, 2 * d, 3 * d)?;

    let by_entity = tape.matmul_nt(prev.states, w_rule)?;
    let by_relation = tape.matmul_nt(rel_table, w_msg)?;
    let by_query = tape.matmul_nt(h_q, w_query)?;

    let slot_entity = tape.gather_rows(by_entity, Rc::clone(&batch.slot_head_row))?;
    let slot_relation = tape.gather_rows(by_relation, Rc::clone(&batch.slot_relation))?;
    let query_plus_bias = tape.add(by_query, b)?;

    let sum = tape.add(slot_entity, slot_relation)?;
    Ok(tape.add_row(sum, query_plus_bias)?)
}

/// Attention weights per edge: score each message against the query, then
/// softmax within each target's incoming-edge group, so weights over any
/// target sum to 1.
pub fn attention<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    layer: &GgatLayerParams,
    messages: &Messages,
    batch: &EdgeBatch,
) -> Result<ValueId, ModelError> {
    let w_a = tape.param(store, layer.w_a);
    let w_s = tape.param(store, layer.w_s);
    let w_q = tape.param(store, layer.w_q);

    let scored_m = tape.matmul_nt(messages.slot_values, w_s)?;
    let scored_q = tape.matmul_nt(messages.h_q, w_q)?;
    let pre = tape.add_row(scored_m, scored_q)?;
    let hidden = tape.relu(pre)?;
    let slot_logits = tape.matmul_nt(hidden, w_a)?;
    let edge_logits = tape.gather_rows(slot_logits, Rc::clone(&batch.edge_slot))?;
    Ok(tape.scatter_softmax(edge_logits, Rc::clone(&batch.edge_target), batch.num_targets())?)
}

/// Weighted sum of messages into each target, through the activation φ.
/// Targets with no incoming edge keep a zero row.
pub fn aggregate<T: Scalar>(
    tape: &mut Tape<T>,
    messages: &Messages,
    weights: ValueId,
    batch: &EdgeBatch,
    phi: Phi,
) -> Result<ValueId, ModelError> {
    let weighted = tape.scale_rows(messages.edge_values, weights)?;
    let summed = tape.scatter_sum_rows(weighted, Rc::clone(&batch.edge_target), batch.num_targets())?;
    Ok(match phi {
        Phi::Relu => tape.relu(summed)?,
        Phi::Tanh => tape.tanh(summed)?,
        Phi::Identity => summed,
    })
}

/// Fuse each target's previous state (zero for newly reached entities) with
/// its aggregated candidate through the layer's update gate.
pub fn update_states<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    layer: &GgatLayerParams,
    batch: &EdgeBatch,
    prev: &LayerStates,
    candidates: ValueId,
    h_q: ValueId,
) -> Result<LayerStates, ModelError> {
    let n = batch.num_targets();
    let h_rule = tape.gather_rows(prev.states, Rc::clone(&batch.target_prev_row))?;
    let h_q_rows = tape.broadcast_row(h_q, n)?;
    let states = apply_update_qrfgu(
        tape,
        store,
        &layer.update_qrfgu,
        h_rule,
        candidates,
        h_q_rows,
    )?;
    Ok(LayerStates::new(batch.target_entities.clone(), states))
}

fn apply_update_qrfgu<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    p: &QrfguParams,
    h_rule: ValueId,
    h_msg: ValueId,
    h_q: ValueId,
) -> Result<ValueId, ModelError> {
    super::qrfgu(tape, store, p, h_rule, h_msg, h_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KnowledgeGraph, Triple, Vocabulary};
    use crate::model::{EncoderConfig, Model, ModelConfig};
    use crate::numerics::Tensor;

    fn star_graph(k: usize) -> KnowledgeGraph {
        let mut vocab = Vocabulary::new();
        vocab.add_entity("center").unwrap();
        for i in 0..k {
            vocab.add_entity(&format!("leaf{i}")).unwrap();
        }
        vocab.add_relation("r").unwrap();
        let triples: Vec<Triple> = (0..k)
            .map(|i| Triple::new(0, 0, (i + 1) as u32))
            .collect();
        KnowledgeGraph::augment(&triples, vocab).unwrap()
    }

    fn toy_model(kg: &KnowledgeGraph, kind: MessageKind, seed: u64) -> Model<f64> {
        Model::init(
            ModelConfig {
                encoder: EncoderConfig::new(2, 0, 4),
                message: kind,
                num_relations: kg.augmented_relation_count(),
            },
            seed,
        )
        .unwrap()
    }

    fn first_layer_setup(
        kg: &KnowledgeGraph,
        model: &Model<f64>,
        tape: &mut Tape<f64>,
    ) -> (LayerStates, EdgeBatch) {
        use crate::kg::{expand_frontier, EntityId, Frontier};
        let source = EntityId(0);
        let zero = tape.zeros(1, model.encoder().d);
        let prev = LayerStates::new(vec![source], zero);
        let frontier = expand_frontier(kg, &Frontier::seed(source));
        let batch = EdgeBatch::build(frontier.edges, &prev).unwrap();
        (prev, batch)
    }

    #[test]
    fn one_message_per_edge() {
        let kg = star_graph(3);
        let model = toy_model(&kg, MessageKind::Qrfgu, 2);
        let mut tape = Tape::new();
        let (prev, batch) = first_layer_setup(&kg, &model, &mut tape);
        assert_eq!(batch.num_edges(), 4); // 3 star edges + identity loop

        let msgs = compute_messages(
            &mut tape,
            &model.store,
            &model.params.layers[0],
            MessageKind::Qrfgu,
            &batch,
            &prev,
            crate::kg::RelationId(0),
        )
        .unwrap();
        assert_eq!(tape.value(msgs.edge_values).rows(), 4);
    }

    #[test]
    fn zero_head_state_and_zero_params_give_zero_message() {
        let kg = star_graph(2);
        let mut model = toy_model(&kg, MessageKind::Qrfgu, 3);
        for (_, p) in model.store.iter_mut() {
            p.value.fill(0.0);
        }
        let mut tape = Tape::new();
        let (prev, batch) = first_layer_setup(&kg, &model, &mut tape);
        let msgs = compute_messages(
            &mut tape,
            &model.store,
            &model.params.layers[0],
            MessageKind::Qrfgu,
            &batch,
            &prev,
            crate::kg::RelationId(0),
        )
        .unwrap();
        assert!(tape.value(msgs.edge_values).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn factored_message_matches_single_vector_qrfgu() {
        let kg = star_graph(3);
        let model = toy_model(&kg, MessageKind::Qrfgu, 17);
        let d = model.encoder().d;
        let mut tape = Tape::new();

        // Non-trivial head state for the center entity.
        let head_state = [0.4, -0.9, 1.3, 0.2];
        let states = tape.leaf(Tensor::row_vector(&head_state));
        let prev = LayerStates::new(vec![crate::kg::EntityId(0)], states);
        let frontier = crate::kg::expand_frontier(&kg, &crate::kg::Frontier::seed(crate::kg::EntityId(0)));
        let batch = EdgeBatch::build(frontier.edges.clone(), &prev).unwrap();
        let q = crate::kg::RelationId(1);
        let layer = &model.params.layers[0];
        let msgs = compute_messages(
            &mut tape,
            &model.store,
            layer,
            MessageKind::Qrfgu,
            &batch,
            &prev,
            q,
        )
        .unwrap();

        // Oracle: run the plain concat-form unit edge by edge.
        let table = model.store.value(layer.relation_table).clone();
        for (e, t) in frontier.edges.iter().enumerate() {
            let mut oracle_tape = Tape::new();
            let rule = oracle_tape.leaf(Tensor::row_vector(&head_state));
            let msg = oracle_tape.leaf(Tensor::row_vector(table.row(t.relation.idx())));
            let hq = oracle_tape.leaf(Tensor::row_vector(table.row(q.idx())));
            let out = crate::model::qrfgu(
                &mut oracle_tape,
                &model.store,
                &layer.message_qrfgu,
                rule,
                msg,
                hq,
            )
            .unwrap();
            for j in 0..d {
                let got = tape.value(msgs.edge_values).get(e, j);
                let want = oracle_tape.value(out).get(0, j);
                assert!(
                    (got - want).abs() < 1e-12,
                    "edge {e} dim {j}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn attention_weights_normalize_per_target() {
        let kg = star_graph(4);
        let model = toy_model(&kg, MessageKind::Qrfgu, 5);
        let mut tape = Tape::new();
        let (prev, batch) = first_layer_setup(&kg, &model, &mut tape);
        let q = crate::kg::RelationId(0);
        let layer = &model.params.layers[0];
        let msgs =
            compute_messages(&mut tape, &model.store, layer, MessageKind::Qrfgu, &batch, &prev, q)
                .unwrap();
        let weights = attention(&mut tape, &model.store, layer, &msgs, &batch).unwrap();

        let w = tape.value(weights);
        let mut per_target = vec![0.0; batch.num_targets()];
        for (e, &g) in batch.edge_target.iter().enumerate() {
            let v = w.get(e, 0);
            assert!(v > 0.0 && v <= 1.0, "weight out of (0,1]: {v}");
            per_target[g] += v;
        }
        for (g, sum) in per_target.iter().enumerate() {
            // Star targets each receive exactly one edge, weight 1.
            assert!((sum - 1.0).abs() < 1e-12, "target {g} sums to {sum}");
        }
    }

    #[test]
    fn attention_matches_naive_softmax_oracle() {
        // Two edges into the same target plus singletons.
        let mut vocab = Vocabulary::new();
        for n in ["a", "b", "c"] {
            vocab.add_entity(n).unwrap();
        }
        vocab.add_relation("r").unwrap();
        vocab.add_relation("s").unwrap();
        let kg = KnowledgeGraph::augment(
            &[Triple::new(0, 0, 2), Triple::new(1, 1, 2), Triple::new(0, 1, 1)],
            vocab,
        )
        .unwrap();
        let model = toy_model(&kg, MessageKind::Qrfgu, 23);
        let mut tape = Tape::new();
        let d = model.encoder().d;
        let states = tape.leaf(
            Tensor::from_vec(2, d, (0..2 * d).map(|i| (i as f64 * 0.31).cos()).collect()).unwrap(),
        );
        let prev = LayerStates::new(vec![crate::kg::EntityId(0), crate::kg::EntityId(1)], states);
        let edges: Vec<Triple> = kg
            .triples()
            .iter()
            .filter(|t| t.head.idx() <= 1)
            .copied()
            .collect();
        let batch = EdgeBatch::build(edges.clone(), &prev).unwrap();
        let layer = &model.params.layers[0];
        let q = crate::kg::RelationId(1);
        let msgs =
            compute_messages(&mut tape, &model.store, layer, MessageKind::Qrfgu, &batch, &prev, q)
                .unwrap();
        let weights = attention(&mut tape, &model.store, layer, &msgs, &batch).unwrap();

        // Naive oracle: per-edge logit from the message values, grouped
        // softmax with plain exp arithmetic.
        let msg_vals = tape.value(msgs.edge_values).clone();
        let hq = tape.value(msgs.h_q).clone();
        let w_s = model.store.value(layer.w_s);
        let w_q = model.store.value(layer.w_q);
        let w_a = model.store.value(layer.w_a);
        let d_a = w_s.rows();
        let mut logits = Vec::new();
        for e in 0..batch.num_edges() {
            let mut c = 0.0;
            for a in 0..d_a {
                let mut pre = 0.0;
                for j in 0..d {
                    pre += w_s.get(a, j) * msg_vals.get(e, j) + w_q.get(a, j) * hq.get(0, j);
                }
                c += w_a.get(0, a) * pre.max(0.0);
            }
            logits.push(c);
        }
        for e in 0..batch.num_edges() {
            let g = batch.edge_target[e];
            let denom: f64 = (0..batch.num_edges())
                .filter(|&o| batch.edge_target[o] == g)
                .map(|o| (logits[o]).exp())
                .sum();
            let want = logits[e].exp() / denom;
            let got = tape.value(weights).get(e, 0);
            assert!((got - want).abs() < 1e-10, "edge {e}: {got} vs {want}");
        }
    }

    #[test]
    fn aggregate_single_edge_identity_phi_passes_message_through() {
        let kg = star_graph(1);
        let model = toy_model(&kg, MessageKind::Qrfgu, 9);
        let mut tape = Tape::new();
        let (prev, batch) = first_layer_setup(&kg, &model, &mut tape);
        let layer = &model.params.layers[0];
        let q = crate::kg::RelationId(0);
        let msgs =
            compute_messages(&mut tape, &model.store, layer, MessageKind::Qrfgu, &batch, &prev, q)
                .unwrap();
        let weights = attention(&mut tape, &model.store, layer, &msgs, &batch).unwrap();
        let agg = aggregate(&mut tape, &msgs, weights, &batch, Phi::Identity).unwrap();
        // Leaf target (row 1) has exactly one incoming edge with weight 1.
        let leaf_row = batch
            .target_entities
            .iter()
            .position(|e| e.idx() == 1)
            .unwrap();
        let edge_idx = batch
            .edges
            .iter()
            .position(|t| t.tail.idx() == 1)
            .unwrap();
        for j in 0..model.encoder().d {
            assert_eq!(
                tape.value(agg).get(leaf_row, j),
                tape.value(msgs.edge_values).get(edge_idx, j)
            );
        }
    }

    #[test]
    fn aggregate_relu_clamps_negative_sums_to_zero() {
        let mut tape = Tape::<f64>::new();
        let kg = star_graph(1);
        let model = toy_model(&kg, MessageKind::Qrfgu, 30);
        let (prev, batch) = first_layer_setup(&kg, &model, &mut tape);
        let _ = prev;
        // Hand-build messages with a negative vector.
        let neg = tape.leaf(Tensor::from_vec(2, 4, vec![-1.0; 8]).unwrap());
        let hq = tape.zeros(1, 4);
        let msgs = Messages {
            slot_values: neg,
            edge_values: neg,
            h_q: hq,
        };
        let w = tape.leaf(Tensor::col_vector(&[1.0, 1.0]));
        let agg = aggregate(&mut tape, &msgs, w, &batch, Phi::Relu).unwrap();
        assert!(tape.value(agg).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn update_uses_zero_prev_state_for_new_entities() {
        let kg = star_graph(2);
        let model = toy_model(&kg, MessageKind::Qrfgu, 11);
        let mut tape = Tape::new();
        let (prev, batch) = first_layer_setup(&kg, &model, &mut tape);
        let layer = &model.params.layers[0];
        let q = crate::kg::RelationId(0);
        let msgs =
            compute_messages(&mut tape, &model.store, layer, MessageKind::Qrfgu, &batch, &prev, q)
                .unwrap();
        let weights = attention(&mut tape, &model.store, layer, &msgs, &batch).unwrap();
        let cand = aggregate(&mut tape, &msgs, weights, &batch, Phi::Relu).unwrap();
        let new_states =
            update_states(&mut tape, &model.store, layer, &batch, &prev, cand, msgs.h_q).unwrap();

        // Oracle: run the plain unit with an explicit zero rule state for a
        // newly reached leaf.
        let leaf_row = new_states.row(crate::kg::EntityId(1)).unwrap();
        let mut oracle = Tape::new();
        let zero_rule = oracle.zeros(1, 4);
        let c = oracle.leaf(Tensor::row_vector(tape.value(cand).row(leaf_row)));
        let hq = oracle.leaf(Tensor::row_vector(tape.value(msgs.h_q).row(0)));
        let want = crate::model::qrfgu(
            &mut oracle,
            &model.store,
            &layer.update_qrfgu,
            zero_rule,
            c,
            hq,
        )
        .unwrap();
        for j in 0..4 {
            let got = tape.value(new_states.states).get(leaf_row, j);
            assert!((got - oracle.value(want).get(0, j)).abs() < 1e-12);
        }
    }
}
