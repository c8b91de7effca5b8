//! Complexity instrumentation: count messages per layer during encoding
//! and compare progressive propagation against whole-graph propagation.
//!
//! ```bash
//! cargo run --release --example message_counts
//! ```

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rungnn::kg::{expand_frontier, EntityId, Frontier, KnowledgeGraph, RelationId, Triple, Vocabulary};
use rungnn::model::{encode, EncodeOptions, EncoderConfig, MessageKind, Model, ModelConfig};
use rungnn::numerics::Tape;

fn sparse_random_graph(entities: usize, relations: usize, edges: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocabulary::new();
    for e in 0..entities {
        vocab.add_entity(&format!("e{e}")).unwrap();
    }
    for r in 0..relations {
        vocab.add_relation(&format!("r{r}")).unwrap();
    }
    let triples: Vec<Triple> = (0..edges)
        .map(|_| {
            Triple::new(
                rng.random_range(0..entities) as u32,
                rng.random_range(0..relations) as u32,
                rng.random_range(0..entities) as u32,
            )
        })
        .collect();
    KnowledgeGraph::augment(&triples, vocab).unwrap()
}

fn main() {
    let kg = sparse_random_graph(500, 6, 650, 42);
    let (n, m) = (4usize, 2usize);
    let model = Model::<f64>::init(
        ModelConfig {
            encoder: EncoderConfig::new(n, m, 8),
            message: MessageKind::Qrfgu,
            num_relations: kg.augmented_relation_count(),
        },
        7,
    )
    .unwrap();

    let mut tape = Tape::new();
    let enc = encode(
        &mut tape,
        &model,
        &kg,
        EntityId(0),
        RelationId(0),
        &EncodeOptions::default(),
    )
    .unwrap();

    println!("sparse graph: {} entities, {} augmented triples", kg.num_entities(), kg.num_triples());
    for (layer, count) in enc.per_layer_messages.iter().enumerate() {
        let stage = if layer < n { "explore" } else { "buffer " };
        println!("  layer {:>2} ({stage}): {count} messages", layer + 1);
    }

    // The counts equal the frontier edge sets exactly.
    let mut frontier = Frontier::seed(EntityId(0));
    let mut expected: Vec<usize> = Vec::new();
    for _ in 0..n {
        frontier = expand_frontier(&kg, &frontier);
        expected.push(frontier.edges.len());
    }
    expected.extend(std::iter::repeat_n(frontier.edges.len(), m));
    assert_eq!(enc.per_layer_messages, expected);

    let whole_graph = (n + m) * kg.num_triples();
    println!(
        "total {} vs whole-graph propagation {} ({} layers x {} edges): ratio {:.3}",
        enc.total_messages(),
        whole_graph,
        n + m,
        kg.num_triples(),
        enc.total_messages() as f64 / whole_graph as f64
    );
}
