//! Progressive encoder: n exploration passes over an expanding subgraph
//! around the query head, then m buffer passes over the fixed final
//! subgraph, so entities reached late can still absorb rule information
//! that older entities refined after their arrival.

use std::collections::{HashMap, HashSet};

use crate::kg::{EntityId, Frontier, KnowledgeGraph, RelationId, Triple};
use crate::numerics::{Scalar, Tape, ValueId};

use super::ggat::{aggregate, attention, compute_messages, update_states, EdgeBatch, LayerStates};
use super::{Model, ModelError};

/// Sparse per-entity rule representations: defined exactly for the reached
/// entities, in frontier order. Unreached entities have no entry and score
/// zero downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityStateTable<T: Scalar> {
    entities: Vec<EntityId>,
    rows: HashMap<EntityId, usize>,
    values: crate::numerics::Tensor<T>,
}

impl<T: Scalar> EntityStateTable<T> {
    pub fn domain(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.rows.contains_key(&e)
    }

    pub fn get(&self, e: EntityId) -> Option<&[T]> {
        self.rows.get(&e).map(|&r| self.values.row(r))
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

/// Attention record for one layer, kept when tracing is requested: the
/// layer's edges, their softmax weights, and which entities were already
/// reached before the layer ran.
#[derive(Debug, Clone)]
pub struct LayerAttention {
    pub edges: Vec<Triple>,
    pub weights: Vec<f64>,
    pub prev_entities: HashSet<EntityId>,
}

/// Result of encoding one query on a tape.
pub struct Encoding {
    /// Reached entities in state-row order (the final frontier).
    pub entities: Vec<EntityId>,
    /// Final states on the tape, [len×d].
    pub states: ValueId,
    /// Messages computed per layer, one per active edge.
    pub per_layer_messages: Vec<usize>,
    /// Per-layer attention traces; empty unless requested.
    pub attention: Vec<LayerAttention>,
}

impl Encoding {
    pub fn total_messages(&self) -> usize {
        self.per_layer_messages.iter().sum()
    }

    pub fn row(&self, e: EntityId) -> Option<usize> {
        self.entities.iter().position(|&x| x == e)
    }
}

/// Options for one encode call.
#[derive(Debug, Clone, Default)]
pub struct EncodeOptions {
    /// Edges removed from the active subgraph for this encoding (with their
    /// inverses), used during training to hide the query's own answer edges.
    pub excluded: HashSet<Triple>,
    /// Record per-layer attention weights for evidence extraction.
    pub trace_attention: bool,
}

/// Encode a query (source, relation) on the given tape. Layer i of n uses
/// the edges whose head was reached within i−1 hops; the m buffer layers
/// reuse the final edge set. States start at zero for every entity,
/// including the source.
pub fn encode<T: Scalar>(
    tape: &mut Tape<T>,
    model: &Model<T>,
    kg: &KnowledgeGraph,
    source: EntityId,
    query: RelationId,
    opts: &EncodeOptions,
) -> Result<Encoding, ModelError> {
    if source.idx() >= kg.num_entities() {
        return Err(ModelError::InvalidEntity(source.idx()));
    }
    if query.idx() >= model.config.num_relations
        || query.idx() >= kg.augmented_relation_count()
    {
        return Err(ModelError::InvalidRelation(query.idx()));
    }
    let cfg = model.encoder();
    let zero = tape.zeros(1, cfg.d);
    let mut states = LayerStates::new(vec![source], zero);
    let mut frontier = Frontier::seed(source);
    let mut per_layer_messages = Vec::with_capacity(cfg.total_layers());
    let mut attention_traces = Vec::new();
    let mut final_batch: Option<EdgeBatch> = None;

    for layer_idx in 0..cfg.total_layers() {
        let exploring = layer_idx < cfg.n;
        let batch = if exploring {
            frontier = expand_excluding(kg, &frontier, &opts.excluded);
            EdgeBatch::build(frontier.edges.clone(), &states)?
        } else {
            // Buffer layers propagate on the fixed final subgraph.
            let edges = final_batch
                .as_ref()
                .map(|b| b.edges.clone())
                .unwrap_or_else(|| frontier.edges.clone());
            EdgeBatch::build(edges, &states)?
        };
        per_layer_messages.push(batch.num_edges());

        let layer = &model.params.layers[layer_idx];
        let messages = compute_messages(
            tape,
            &model.store,
            layer,
            model.config.message,
            &batch,
            &states,
            query,
        )?;
        let weights = attention(tape, &model.store, layer, &messages, &batch)?;
        if opts.trace_attention {
            attention_traces.push(LayerAttention {
                edges: batch.edges.clone(),
                weights: tape.value(weights).data().iter().map(|w| w.to_f64()).collect(),
                prev_entities: states.entities.iter().copied().collect(),
            });
        }
        let candidates = aggregate(tape, &messages, weights, &batch, cfg.phi)?;
        let next = update_states(tape, &model.store, layer, &batch, &states, candidates, messages.h_q)?;
        states = next;
        if exploring && layer_idx + 1 == cfg.n {
            final_batch = Some(batch);
        }
    }

    Ok(Encoding {
        entities: states.entities,
        states: states.states,
        per_layer_messages,
        attention: attention_traces,
    })
}

/// Frontier expansion that skips an excluded edge set. Exclusion applies to
/// reachability too: an entity whose only incoming edge is excluded is not
/// reached this encoding.
fn expand_excluding(
    kg: &KnowledgeGraph,
    prev: &Frontier,
    excluded: &HashSet<Triple>,
) -> Frontier {
    if excluded.is_empty() {
        return crate::kg::expand_frontier(kg, prev);
    }
    let mut member = vec![false; kg.num_entities()];
    for e in &prev.entities {
        member[e.idx()] = true;
    }
    let mut edges = Vec::new();
    for &e in &prev.entities {
        edges.extend(
            kg.outgoing(e)
                .iter()
                .filter(|t| !excluded.contains(t))
                .copied(),
        );
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

/// Scores of the reached entities on the tape: [len×1] = states·W_scoreᵀ.
pub fn score_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    model: &Model<T>,
    encoding: &Encoding,
) -> Result<ValueId, ModelError> {
    let w = tape.param(&model.store, model.params.w_score);
    Ok(tape.matmul_nt(encoding.states, w)?)
}

/// Dense score vector over the whole vocabulary: reached entities get their
/// decoder output, unreached entities get exactly 0.
pub fn score_dense<T: Scalar>(
    tape: &mut Tape<T>,
    model: &Model<T>,
    encoding: &Encoding,
    num_entities: usize,
) -> Result<Vec<T>, ModelError> {
    let scores = score_on_tape(tape, model, encoding)?;
    let col = tape.value(scores);
    let mut dense = vec![T::ZERO; num_entities];
    for (row, &e) in encoding.entities.iter().enumerate() {
        dense[e.idx()] = col.get(row, 0);
    }
    Ok(dense)
}

/// Dense scores over the vocabulary from a materialized state table:
/// score(o) = W_score·h_o for reached entities, exactly 0 otherwise.
pub fn score_entities<T: Scalar>(
    table: &EntityStateTable<T>,
    model: &Model<T>,
    num_entities: usize,
) -> Vec<T> {
    let w = model.store.value(model.params.w_score);
    let mut dense = vec![T::ZERO; num_entities];
    for &e in table.domain() {
        let state = table.get(e).expect("domain entity has a row");
        let mut acc = T::ZERO;
        for (x, wj) in state.iter().zip(w.data().iter()) {
            acc += *x * *wj;
        }
        dense[e.idx()] = acc;
    }
    dense
}

/// Convenience wrapper: encode and copy the final states off the tape.
pub fn encode_states<T: Scalar>(
    model: &Model<T>,
    kg: &KnowledgeGraph,
    source: EntityId,
    query: RelationId,
) -> Result<EntityStateTable<T>, ModelError> {
    let mut tape = Tape::new();
    let enc = encode(&mut tape, model, kg, source, query, &EncodeOptions::default())?;
    let values = tape.value(enc.states).clone();
    let rows = enc
        .entities
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, i))
        .collect();
    Ok(EntityStateTable {
        entities: enc.entities,
        rows,
        values,
    })
}
