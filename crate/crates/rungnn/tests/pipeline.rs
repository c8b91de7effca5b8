//! End-to-end training invariants: reload determinism, early loss
//! descent, and the pure-chain fit example.

use rungnn::eval::{evaluate, AblationVariant, Direction};
use rungnn::kg::synthetic::SyntheticSpec;
use rungnn::model::{EncoderConfig, MessageKind, Model, ModelConfig};
use rungnn::training::{
    fit, group_queries, load_checkpoint, save_checkpoint, train_epoch, Adam, TrainConfig,
};

#[test]
fn fit_save_load_evaluate_reproduces_validation_mrr_exactly() {
    let data = SyntheticSpec::sequential(10, 8).generate();
    let mut model = Model::<f64>::init(
        ModelConfig {
            encoder: EncoderConfig::new(2, 1, 8),
            message: MessageKind::Qrfgu,
            num_relations: data.split.fact_graph.augmented_relation_count(),
        },
        4,
    )
    .unwrap();
    let config = TrainConfig {
        learning_rate: 5e-3,
        epochs: 4,
        patience: 10,
        ..Default::default()
    };
    let outcome = fit(&mut model, &data.split, &config, None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.ckpt");
    save_checkpoint(&path, &outcome.best).unwrap();
    let reloaded = load_checkpoint::<f64>(&path).unwrap();
    let again = evaluate(
        &reloaded,
        &data.split,
        &data.split.valid_queries,
        Direction::Both,
    )
    .unwrap();
    assert_eq!(
        again.report.mrr, outcome.best_valid_mrr,
        "reloaded checkpoint must reproduce the recorded validation MRR exactly"
    );
}

#[test]
fn loss_decreases_over_first_five_epochs_for_most_seeds() {
    let mut descending = 0;
    for seed in 0..10u64 {
        let data = SyntheticSpec::sequential(10, 31).generate();
        let mut model = Model::<f64>::init(
            ModelConfig {
                encoder: EncoderConfig::new(2, 0, 8),
                message: MessageKind::Qrfgu,
                num_relations: data.split.fact_graph.augmented_relation_count(),
            },
            seed,
        )
        .unwrap();
        let config = TrainConfig {
            learning_rate: 2e-3,
            seed,
            ..Default::default()
        };
        let groups = group_queries(&data.split, true);
        let mut optimizer = Adam::new(
            config.learning_rate,
            config.beta1,
            config.beta2,
            config.adam_epsilon,
        );
        let mut losses = Vec::new();
        for epoch in 1..=5 {
            let stats =
                train_epoch(&mut model, &data.split, &groups, &config, &mut optimizer, epoch)
                    .unwrap();
            losses.push(stats.mean_loss);
        }
        if losses.last().unwrap() < losses.first().unwrap() {
            descending += 1;
        }
    }
    assert!(
        descending >= 9,
        "loss fell over the first 5 epochs for only {descending}/10 seeds"
    );
}

#[test]
fn grandfather_chain_rule_is_learned_within_two_hundred_epochs() {
    // father∘father → grandfather, n=2, m=0, d=16.
    let data = SyntheticSpec::chains(30, 2, 2, false, 17).generate();
    let mut model = Model::<f64>::init(
        ModelConfig {
            encoder: EncoderConfig::new(2, 0, 16),
            message: MessageKind::Qrfgu,
            num_relations: data.split.fact_graph.augmented_relation_count(),
        },
        1,
    )
    .unwrap();
    let config = TrainConfig {
        learning_rate: 1e-2,
        epochs: 200,
        patience: 25,
        seed: 1,
        workers: 2,
        ..Default::default()
    };
    let outcome = fit(&mut model, &data.split, &config, None).unwrap();
    let valid = evaluate(
        &outcome.best,
        &data.split,
        &data.split.valid_queries,
        Direction::TailOnly,
    )
    .unwrap();
    assert_eq!(
        valid.report.hit1, 1.0,
        "validation Hit@1 should reach 1.0 (best epoch {}, log {} epochs)",
        outcome.best_epoch,
        outcome.log.len()
    );

    // Beam-1 evidence for a grandfather query recovers father∘father.
    let kg = &data.split.fact_graph;
    let vocab = kg.vocab();
    let query = data.split.test_queries[0];
    let evidence = rungnn::eval::extract_evidence_paths(
        &outcome.best,
        kg,
        query.head,
        query.relation,
        query.answer,
        1,
    )
    .unwrap();
    assert!(evidence.answer_reached);
    let best_path = &evidence.paths[0];
    let relations: Vec<String> = best_path
        .triples
        .iter()
        .map(|t| vocab.relation_display(t.relation))
        .collect();
    assert_eq!(relations, vec!["father", "father"]);
}

#[test]
fn no_buffer_variant_behaves_like_m_zero() {
    let data = SyntheticSpec::sequential(6, 12).generate();
    let base = ModelConfig {
        encoder: EncoderConfig::new(2, 2, 8),
        message: MessageKind::Qrfgu,
        num_relations: data.split.fact_graph.augmented_relation_count(),
    };
    let variant = rungnn::eval::apply_variant(&base, AblationVariant::NoBuffer);
    assert_eq!(variant.encoder.m, 0);
    let model = Model::<f64>::init(variant, 3).unwrap();
    // Encoding depth follows n only.
    let table = rungnn::model::encode_states(
        &model,
        &data.split.fact_graph,
        rungnn::kg::EntityId(0),
        rungnn::kg::RelationId(0),
    )
    .unwrap();
    assert!(!table.is_empty());
}
