//! Show the buffering update mechanism closing the gap left by lagged
//! information: on a KG whose discriminating relational walk is longer
//! than the exploration depth, m = 0 cannot tell the answer from its
//! mirror decoy (their scores tie), while two buffer passes on the fixed
//! final subgraph deliver the late evidence.
//!
//! ```bash
//! cargo run --release --example buffered_propagation
//! ```

use rungnn::eval::{bucket_results, evaluate, Direction};
use rungnn::kg::synthetic::SyntheticSpec;
use rungnn::model::{EncoderConfig, MessageKind, Model, ModelConfig};
use rungnn::training::{fit, TrainConfig};

fn main() {
    let data = SyntheticSpec::chains(40, 3, 4, true, 101).generate();
    println!(
        "lag-chain KG: {} entities, answers at 3-4 hops, discriminating walk length 5-6",
        data.split.fact_graph.num_entities()
    );

    for m in [0usize, 2] {
        let mut model = Model::<f64>::init(
            ModelConfig {
                encoder: EncoderConfig::new(4, m, 16),
                message: MessageKind::Qrfgu,
                num_relations: data.split.fact_graph.augmented_relation_count(),
            },
            1,
        )
        .unwrap();
        let config = TrainConfig {
            learning_rate: 5e-3,
            epochs: 40,
            patience: 40,
            seed: 1,
            workers: 2,
            ..Default::default()
        };
        let outcome = fit(&mut model, &data.split, &config, None).unwrap();
        let out = evaluate(
            &outcome.best,
            &data.split,
            &data.split.test_queries,
            Direction::TailOnly,
        )
        .unwrap();
        println!("n=4 m={m}: overall test MRR {:.4}", out.report.mrr);
        for bucket in bucket_results(&data.split, &out.results).unwrap() {
            println!(
                "  {}-hop bucket: MRR {:.4} over {} queries",
                bucket.bucket, bucket.report.mrr, bucket.report.count
            );
        }
    }
    println!("with m=0 every deep query ties its mirror decoy (MRR 0.5); buffering resolves it");
}
