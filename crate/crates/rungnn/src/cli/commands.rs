//! Command implementations behind the `rungnn` binary. Every command
//! validates its inputs before any compute starts and writes
//! machine-readable outputs under the run directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::eval::{
    apply_variant, bucket_results, evaluate, evidence_to_text, extract_evidence_paths,
    order_sensitivity_probe, write_labeled_metrics_csv, AblationVariant, Direction,
    LabeledMetrics,
};
use crate::kg::{DatasetSplit, EntityId, RelationId};
use crate::model::{Model, ModelConfig};
use crate::numerics::{finite_diff_check, Precision, Scalar, Tape};
use crate::training::{
    checkpoint_info, fit, group_loss_on_tape, group_queries, load_checkpoint, TrainError,
};

use super::config::{DatasetConfig, RunConfig};
use super::CliError;

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(CliError::validation)
}

/// Validate and summarize a dataset: split counts, vocabulary totals, and a
/// cross-check against `manifest.json` when one is present.
pub fn cmd_prepare(config: &RunConfig) -> Result<String, CliError> {
    config.dataset.validate()?;
    let split = config.dataset.load()?;
    let kg = &split.fact_graph;
    let mut out = String::new();
    out.push_str(&format!(
        "entities: {}\nrelations: {} base / {} augmented\nfact triples: {} (augmented, incl. inverse + identity)\ntrain queries: {}\nvalid queries: {}\ntest queries: {}\n",
        kg.num_entities(),
        kg.base_relation_count(),
        kg.augmented_relation_count(),
        kg.num_triples(),
        split.train_queries.len(),
        split.valid_queries.len(),
        split.test_queries.len(),
    ));
    if let DatasetConfig::Dir { path } = &config.dataset {
        let manifest = path.join("manifest.json");
        if manifest.is_file() {
            let text = fs::read_to_string(&manifest)
                .map_err(|e| CliError::Validation(format!("read manifest: {e}")))?;
            let expected: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("parse manifest: {e}")))?;
            let checks = [
                ("entities", kg.num_entities()),
                ("relations", kg.base_relation_count()),
                ("train", split.train_queries.len()),
                ("valid", split.valid_queries.len()),
                ("test", split.test_queries.len()),
            ];
            for (key, got) in checks {
                if let Some(want) = expected.get(key).and_then(|v| v.as_u64()) {
                    if want as usize != got {
                        return Err(CliError::Validation(format!(
                            "manifest mismatch for {key}: file says {want}, dataset has {got}"
                        )));
                    }
                    out.push_str(&format!("manifest {key}: ok ({got})\n"));
                }
            }
        }
    }
    Ok(out)
}

/// Train per config (variant applied), writing checkpoints and the
/// training log under the run directory. Returns the run directory.
pub fn cmd_train(config: &RunConfig) -> Result<PathBuf, CliError> {
    config.validate()?;
    match config.train.precision {
        Precision::F64 => train_typed::<f64>(config),
        Precision::F32 => train_typed::<f32>(config),
    }
}

fn train_typed<T: Scalar>(config: &RunConfig) -> Result<PathBuf, CliError> {
    let split = config.dataset.load()?;
    let base_model_config = ModelConfig {
        encoder: config.encoder,
        message: Default::default(),
        num_relations: split.fact_graph.augmented_relation_count(),
    };
    let model_config = apply_variant(&base_model_config, config.variant);
    let mut model = Model::<T>::init(model_config, config.seed)?;
    let run_dir = config.resolve_out_dir();
    let mut train_config = config.train.clone();
    train_config.seed = config.seed;
    let outcome = fit(&mut model, &split, &train_config, Some(&run_dir))?;
    println!(
        "best validation MRR {:.4} at epoch {} ({} epochs run); checkpoints in {}",
        outcome.best_valid_mrr,
        outcome.best_epoch,
        outcome.log.len(),
        run_dir.display()
    );
    Ok(run_dir)
}

/// Evaluate a checkpoint on a dataset's test queries; writes metrics.json
/// and metrics.csv next to the checkpoint unless an output dir is given.
pub fn cmd_evaluate(
    checkpoint: &Path,
    dataset: &DatasetConfig,
    direction: Direction,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<crate::eval::MetricsReport, CliError> {
    dataset.validate()?;
    let info = checkpoint_info(checkpoint)?;
    match info.precision {
        Precision::F64 => evaluate_typed::<f64>(checkpoint, dataset, direction, workers, out_dir),
        Precision::F32 => evaluate_typed::<f32>(checkpoint, dataset, direction, workers, out_dir),
    }
}

fn evaluate_typed<T: Scalar>(
    checkpoint: &Path,
    dataset: &DatasetConfig,
    direction: Direction,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<crate::eval::MetricsReport, CliError> {
    let model = load_checkpoint::<T>(checkpoint)?;
    let split = dataset.load()?;
    check_relation_compatibility(&model.config, &split)?;
    let outcome = pool(workers)?
        .install(|| evaluate(&model, &split, &split.test_queries, direction))?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| checkpoint.parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Validation(format!("create {}: {e}", dir.display())))?;
    let json = serde_json::to_string_pretty(&outcome.report)
        .map_err(CliError::validation)?;
    fs::write(dir.join("metrics.json"), json)
        .map_err(|e| CliError::Validation(format!("write metrics.json: {e}")))?;
    write_labeled_metrics_csv(
        &dir.join("metrics.csv"),
        &[LabeledMetrics::plain(outcome.report)],
    )?;
    Ok(outcome.report)
}

fn check_relation_compatibility(
    model: &ModelConfig,
    split: &DatasetSplit,
) -> Result<(), CliError> {
    let have = split.fact_graph.augmented_relation_count();
    if model.num_relations != have {
        return Err(CliError::Validation(format!(
            "checkpoint was trained for {} augmented relations, dataset has {have}",
            model.num_relations
        )));
    }
    Ok(())
}

/// Train and evaluate every variant × seed combination; one combined CSV.
pub fn cmd_ablate(
    config: &RunConfig,
    variants: &[AblationVariant],
    seeds: &[u64],
) -> Result<PathBuf, CliError> {
    config.validate()?;
    if variants.is_empty() || seeds.is_empty() {
        return Err(CliError::Validation("ablate needs variants and seeds".into()));
    }
    let run_dir = config.resolve_out_dir();
    fs::create_dir_all(&run_dir)
        .map_err(|e| CliError::Validation(format!("create {}: {e}", run_dir.display())))?;
    let mut rows = Vec::new();
    for &variant in variants {
        for &seed in seeds {
            let mut sub = config.clone();
            sub.variant = variant;
            sub.seed = seed;
            sub.train.seed = seed;
            sub.out_dir = Some(run_dir.join(format!("{variant}-seed{seed}")));
            let dir = cmd_train(&sub)?;
            let report = cmd_evaluate(
                &dir.join("best.ckpt"),
                &sub.dataset,
                sub.direction,
                sub.train.workers,
                Some(&dir),
            )?;
            rows.push(LabeledMetrics {
                bucket: None,
                variant: Some(variant.to_string()),
                seed: Some(seed),
                report,
            });
        }
    }
    let csv = run_dir.join("ablation.csv");
    write_labeled_metrics_csv(&csv, &rows)?;
    Ok(csv)
}

/// Hop-bucketed evaluation of a checkpoint; writes hops.csv.
pub fn cmd_hops(
    checkpoint: &Path,
    dataset: &DatasetConfig,
    direction: Direction,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<PathBuf, CliError> {
    dataset.validate()?;
    let info = checkpoint_info(checkpoint)?;
    let (outcome_rows, dir) = match info.precision {
        Precision::F64 => hops_typed::<f64>(checkpoint, dataset, direction, workers)?,
        Precision::F32 => hops_typed::<f32>(checkpoint, dataset, direction, workers)?,
    };
    let dir = out_dir.map(Path::to_path_buf).unwrap_or(dir);
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Validation(format!("create {}: {e}", dir.display())))?;
    let csv = dir.join("hops.csv");
    write_labeled_metrics_csv(&csv, &outcome_rows)?;
    Ok(csv)
}

fn hops_typed<T: Scalar>(
    checkpoint: &Path,
    dataset: &DatasetConfig,
    direction: Direction,
    workers: usize,
) -> Result<(Vec<LabeledMetrics>, PathBuf), CliError> {
    let model = load_checkpoint::<T>(checkpoint)?;
    let split = dataset.load()?;
    check_relation_compatibility(&model.config, &split)?;
    let outcome = pool(workers)?
        .install(|| evaluate(&model, &split, &split.test_queries, direction))?;
    let buckets = bucket_results(&split, &outcome.results)?;
    let mut rows = vec![LabeledMetrics {
        bucket: Some("all".into()),
        variant: None,
        seed: None,
        report: outcome.report,
    }];
    for b in buckets {
        rows.push(LabeledMetrics {
            bucket: Some(b.bucket),
            variant: None,
            seed: None,
            report: b.report,
        });
    }
    let dir = checkpoint.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((rows, dir))
}

/// Arguments for the order-sensitivity probe.
pub struct ProbeOrderArgs<'a> {
    /// Checkpoints to probe, labeled (e.g. "full", "addition").
    pub checkpoints: Vec<(String, PathBuf)>,
    /// Relation-pair file: two TAB-separated relation names per line.
    pub pairs_file: &'a Path,
    pub dataset: &'a DatasetConfig,
    pub out_dir: Option<&'a Path>,
}

/// Probe swapped-pair encoding distances for one or more checkpoints;
/// writes probe_order.csv with per-pair distances and summary rows.
pub fn cmd_probe_order(args: &ProbeOrderArgs<'_>) -> Result<PathBuf, CliError> {
    args.dataset.validate()?;
    let split = args.dataset.load()?;
    let vocab = split.fact_graph.vocab();
    let text = fs::read_to_string(args.pairs_file)
        .map_err(|e| CliError::Validation(format!("read {}: {e}", args.pairs_file.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(CliError::Validation(format!(
                "{}:{}: expected rel1<TAB>rel2",
                args.pairs_file.display(),
                lineno + 1
            )));
        };
        let ra = vocab
            .relation(a)
            .ok_or_else(|| CliError::Validation(format!("unknown relation '{a}'")))?;
        let rb = vocab
            .relation(b)
            .ok_or_else(|| CliError::Validation(format!("unknown relation '{b}'")))?;
        pairs.push((ra, rb));
    }
    if pairs.is_empty() {
        return Err(CliError::Validation("no relation pairs given".into()));
    }

    let dir = args
        .out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Validation(format!("create {}: {e}", dir.display())))?;
    let csv_path = dir.join("probe_order.csv");
    let mut csv = String::from("checkpoint,r1,r2,cosine_distance\n");
    for (label, path) in &args.checkpoints {
        let info = checkpoint_info(path)?;
        let report = match info.precision {
            Precision::F64 => {
                let model = load_checkpoint::<f64>(path)?;
                order_sensitivity_probe(&model, &pairs)?
            }
            Precision::F32 => {
                let model = load_checkpoint::<f32>(path)?;
                order_sensitivity_probe(&model, &pairs)?
            }
        };
        for row in &report.rows {
            csv.push_str(&format!(
                "{label},{},{},{}\n",
                vocab.relation_display(row.r1),
                vocab.relation_display(row.r2),
                row.cosine_distance
            ));
        }
        csv.push_str(&format!("{label},mean,,{}\n", report.mean()));
        csv.push_str(&format!("{label},median,,{}\n", report.median()));
        println!(
            "{label}: mean distance {:.6}, median {:.6} over {} pairs",
            report.mean(),
            report.median(),
            report.rows.len()
        );
    }
    fs::write(&csv_path, csv)
        .map_err(|e| CliError::Validation(format!("write {}: {e}", csv_path.display())))?;
    Ok(csv_path)
}

/// Arguments for evidence extraction.
pub struct ExtractArgs<'a> {
    pub checkpoint: &'a Path,
    pub dataset: &'a DatasetConfig,
    pub head: &'a str,
    pub relation: &'a str,
    /// Explicit answer entity; defaults to the model's top prediction.
    pub answer: Option<&'a str>,
    pub beam_width: usize,
    pub out_dir: Option<&'a Path>,
}

/// Extract high-attention evidence paths for one query; prints them and
/// writes evidence.txt.
pub fn cmd_extract(args: &ExtractArgs<'_>) -> Result<String, CliError> {
    args.dataset.validate()?;
    let info = checkpoint_info(args.checkpoint)?;
    match info.precision {
        Precision::F64 => extract_typed::<f64>(args),
        Precision::F32 => extract_typed::<f32>(args),
    }
}

fn extract_typed<T: Scalar>(args: &ExtractArgs<'_>) -> Result<String, CliError> {
    let model = load_checkpoint::<T>(args.checkpoint)?;
    let split = args.dataset.load()?;
    check_relation_compatibility(&model.config, &split)?;
    let kg = &split.fact_graph;
    let vocab = kg.vocab();
    let head = vocab
        .entity(args.head)
        .ok_or_else(|| CliError::Validation(format!("unknown entity '{}'", args.head)))?;
    let relation = vocab
        .relation(args.relation)
        .ok_or_else(|| CliError::Validation(format!("unknown relation '{}'", args.relation)))?;
    let answer = match args.answer {
        Some(name) => vocab
            .entity(name)
            .ok_or_else(|| CliError::Validation(format!("unknown entity '{name}'")))?,
        None => top_prediction(&model, kg, head, relation)?,
    };
    let outcome = extract_evidence_paths(&model, kg, head, relation, answer, args.beam_width)?;
    let mut text = String::new();
    text.push_str(&format!(
        "query ({}, {}) -> {}\n",
        args.head,
        args.relation,
        vocab.entity_name(answer)
    ));
    if !outcome.answer_reached {
        text.push_str("answer not reached within the explored subgraph; no paths\n");
    }
    for path in &outcome.paths {
        text.push_str(&evidence_to_text(path, vocab));
        text.push('\n');
    }
    if let Some(dir) = args.out_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("create {}: {e}", dir.display())))?;
        fs::write(dir.join("evidence.txt"), &text)
            .map_err(|e| CliError::Validation(format!("write evidence.txt: {e}")))?;
    }
    Ok(text)
}

fn top_prediction<T: Scalar>(
    model: &Model<T>,
    kg: &crate::kg::KnowledgeGraph,
    head: EntityId,
    relation: RelationId,
) -> Result<EntityId, CliError> {
    let mut tape = Tape::new();
    let enc = crate::model::encode(
        &mut tape,
        model,
        kg,
        head,
        relation,
        &Default::default(),
    )?;
    let dense = crate::model::score_dense(&mut tape, model, &enc, kg.num_entities())?;
    let best = dense
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.to_f64().partial_cmp(&b.1.to_f64()).expect("finite"))
        .map(|(i, _)| EntityId(i as u32))
        .expect("non-empty vocabulary");
    Ok(best)
}

/// Finite-difference gradient check of the configured model on its own
/// dataset: one batch-of-one loss per sampled query, every parameter
/// checked. Fails with exit code 2 when any parameter exceeds tolerance.
///
/// The check runs at a generic parameter point: zero-initialized biases are
/// deterministically jittered first, since the init point leaves kinked
/// activations sitting exactly at their corner where central differences
/// are undefined.
pub fn cmd_gradcheck(
    config: &RunConfig,
    epsilon: f64,
    tolerance: f64,
) -> Result<String, CliError> {
    config.validate()?;
    let split = config.dataset.load()?;
    let base_model_config = ModelConfig {
        encoder: config.encoder,
        message: Default::default(),
        num_relations: split.fact_graph.augmented_relation_count(),
    };
    let model_config = apply_variant(&base_model_config, config.variant);
    let mut model = Model::<f64>::init(model_config, config.seed)?;
    jitter_biases(&mut model, config.seed);
    let groups = group_queries(&split, true);
    if groups.is_empty() {
        return Err(CliError::Validation("dataset has no training queries".into()));
    }
    let group = groups[config.seed as usize % groups.len()].clone();
    let kg = split.fact_graph.clone();
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
            // Inputs were validated above; a loss failure here is a bug.
            let (loss, _) = group_loss_on_tape(&mut tape, &probe, &kg, &group, true)
                .map_err(|e| match e {
                    TrainError::Numerics(n) => n,
                    other => panic!("gradcheck loss construction failed: {other}"),
                })?;
            Ok((tape, loss))
        },
        &mut model.store,
        epsilon,
        tolerance,
    )
    .map_err(CliError::validation)?;
    let text = report.to_string();
    if report.passed() {
        Ok(text)
    } else {
        Err(CliError::Numeric(format!(
            "gradient check failed (max relative error {:.3e} > {tolerance:.1e})\n{text}",
            report.max_rel_error()
        )))
    }
}

/// Move every zero-initialized bias to a small seeded value.
pub fn jitter_biases<T: Scalar>(model: &mut Model<T>, seed: u64) {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED));
    for (_, p) in model.store.iter_mut() {
        if p.name.contains(".b_") {
            for v in p.value.data_mut() {
                *v = T::from_f64(rng.random_range(-0.05..=0.05));
            }
        }
    }
}
