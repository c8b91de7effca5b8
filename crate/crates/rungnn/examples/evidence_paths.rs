//! Extract the high-attention relational paths behind a prediction: after
//! training, walk attention backwards from the answer to the query head.
//!
//! ```bash
//! cargo run --release --example evidence_paths
//! ```

use rungnn::eval::{evidence_to_text, extract_evidence_paths};
use rungnn::kg::synthetic::SyntheticSpec;
use rungnn::model::{EncoderConfig, MessageKind, Model, ModelConfig};
use rungnn::training::{fit, TrainConfig};

fn main() {
    let data = SyntheticSpec::sequential(30, 21).generate();
    let mut model = Model::<f64>::init(
        ModelConfig {
            encoder: EncoderConfig::new(2, 0, 16),
            message: MessageKind::Qrfgu,
            num_relations: data.split.fact_graph.augmented_relation_count(),
        },
        2,
    )
    .unwrap();
    let config = TrainConfig {
        learning_rate: 1e-2,
        epochs: 60,
        patience: 15,
        seed: 2,
        workers: 2,
        ..Default::default()
    };
    let outcome = fit(&mut model, &data.split, &config, None).unwrap();
    let model = outcome.best;

    let kg = &data.split.fact_graph;
    let vocab = kg.vocab();
    for query in data.split.test_queries.iter().take(4) {
        let evidence =
            extract_evidence_paths(&model, kg, query.head, query.relation, query.answer, 3)
                .unwrap();
        println!(
            "query ({}, {}) -> {}",
            vocab.entity_name(query.head),
            vocab.relation_display(query.relation),
            vocab.entity_name(query.answer)
        );
        if !evidence.answer_reached {
            println!("  answer unreached inside the explored subgraph");
            continue;
        }
        for path in evidence.paths.iter().take(2) {
            println!("  {}", evidence_to_text(path, vocab));
        }
    }
}
