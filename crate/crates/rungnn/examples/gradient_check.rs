//! Verify the reverse-mode gradients of the full network against central
//! finite differences, parameter by parameter.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use rungnn::cli::jitter_biases;
use rungnn::kg::synthetic::SyntheticSpec;
use rungnn::model::{EncoderConfig, MessageKind, Model, ModelConfig, Phi};
use rungnn::numerics::{finite_diff_check, Tape};
use rungnn::training::{group_loss_on_tape, group_queries, TrainError};

fn main() {
    let data = SyntheticSpec::sequential(2, 7).generate();
    let kg = data.split.fact_graph.clone();
    let group = group_queries(&data.split, true)[3].clone();

    let mut encoder = EncoderConfig::new(2, 1, 6);
    encoder.phi = Phi::Tanh;
    let mut model = Model::<f64>::init(
        ModelConfig {
            encoder,
            message: MessageKind::Qrfgu,
            num_relations: kg.augmented_relation_count(),
        },
        13,
    )
    .unwrap();
    // Check at a generic point: biases off their zero-init corner, so no
    // kinked activation sits exactly where central differences break down.
    jitter_biases(&mut model, 13);

    let model_cfg = model.config.clone();
    let params = model.params.clone();
    let report = finite_diff_check(
        move |store| {
            let probe = Model {
                config: model_cfg.clone(),
                params: params.clone(),
                store: store.clone(),
            };
            let mut tape = Tape::new();
            let (loss, _) =
                group_loss_on_tape(&mut tape, &probe, &kg, &group, true).map_err(|e| match e {
                    TrainError::Numerics(err) => err,
                    other => panic!("loss construction failed: {other}"),
                })?;
            Ok((tape, loss))
        },
        &mut model.store,
        1e-3,
        1e-4,
    )
    .unwrap();

    print!("{report}");
    println!(
        "overall: max relative error {:.3e} across {} parameters -> {}",
        report.max_rel_error(),
        report.per_param.len(),
        if report.passed() { "PASS" } else { "FAIL" }
    );
    assert!(report.passed());
}
