//! Command-line front end: parses arguments, loads the run config, applies
//! overrides, and dispatches into the library. Exit codes: 0 success,
//! 1 validation error, 2 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rungnn::cli::{
    cmd_ablate, cmd_evaluate, cmd_extract, cmd_gradcheck, cmd_hops, cmd_prepare, cmd_probe_order,
    cmd_train, load_run_config, preset, preset_names, CliError, DatasetConfig, ExtractArgs,
    Overrides, ProbeOrderArgs, RunConfig,
};
use rungnn::eval::{AblationVariant, Direction};
use rungnn::numerics::Precision;

#[derive(Parser)]
#[command(
    name = "rungnn",
    about = "Progressive relational GNN for knowledge-graph link prediction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOverrides {
    /// Master seed for initialization and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Numeric precision for new runs (f32 or f64).
    #[arg(long, global = true)]
    precision: Option<Precision>,
    /// Worker threads; 1 guarantees byte-identical reruns.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (defaults to $RUNGNN_RUN_DIR, then ./runs).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

impl CommonOverrides {
    fn to_overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            precision: self.precision,
            workers: self.workers,
            out_dir: self.out_dir.clone(),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and print split statistics.
    Prepare {
        /// Run config JSON, or use --dataset for a bare directory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory (train.txt, valid.txt, test.txt).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Train a model from a run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Encoder preset overriding the config (see list-presets).
        #[arg(long)]
        preset: Option<String>,
        /// Ablation variant: full, addition, multiplication, no-buffer.
        #[arg(long)]
        variant: Option<AblationVariant>,
        /// Cap on training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Evaluate a checkpoint with filtered ranking.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// both or tail-only.
        #[arg(long)]
        direction: Option<Direction>,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Train and evaluate variant × seed combinations into one CSV.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated variants (default: all four).
        #[arg(long, value_delimiter = ',')]
        variants: Vec<AblationVariant>,
        /// Comma-separated seeds (default: 1,2,3).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Hop-bucketed evaluation of a checkpoint.
    Hops {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        direction: Option<Direction>,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Compare swapped-order relation-pair encodings across checkpoints.
    ProbeOrder {
        /// Checkpoints as label=path, repeatable.
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<String>,
        /// File of TAB-separated relation-name pairs.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Extract high-attention evidence paths for one query.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Query head entity name.
        #[arg(long)]
        head: String,
        /// Query relation name.
        #[arg(long)]
        relation: String,
        /// Answer entity name; defaults to the model's top prediction.
        #[arg(long)]
        answer: Option<String>,
        #[arg(long, default_value_t = 3)]
        beam: usize,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Finite-difference check of the configured model's gradients.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// List encoder presets.
    ListPresets,
}

fn dataset_arg(
    config: Option<&PathBuf>,
    dataset: Option<&PathBuf>,
    common: &CommonOverrides,
) -> Result<(RunConfig, DatasetConfig), CliError> {
    let mut run = match (config, dataset) {
        (Some(path), _) => load_run_config(path)?,
        (None, Some(dir)) => RunConfig {
            dataset: DatasetConfig::Dir { path: dir.clone() },
            encoder: rungnn::model::EncoderConfig::new(1, 0, 8),
            train: Default::default(),
            variant: Default::default(),
            direction: Default::default(),
            out_dir: None,
            seed: 0,
        },
        (None, None) => {
            return Err(CliError::Validation(
                "pass --config <file> or --dataset <dir>".into(),
            ))
        }
    };
    common.to_overrides().apply(&mut run);
    let ds = run.dataset.clone();
    Ok((run, ds))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare { config, dataset, common } => {
            let (run, _) = dataset_arg(config.as_ref(), dataset.as_ref(), &common)?;
            print!("{}", cmd_prepare(&run)?);
            Ok(())
        }
        Command::Train {
            config,
            preset: preset_name,
            variant,
            epochs,
            common,
        } => {
            let mut run = load_run_config(&config)?;
            if let Some(name) = preset_name {
                run.encoder = preset(&name).ok_or_else(|| {
                    CliError::Validation(format!(
                        "unknown preset '{name}' (available: {})",
                        preset_names().join(", ")
                    ))
                })?;
            }
            let mut ov = common.to_overrides();
            ov.variant = variant;
            ov.epochs = epochs;
            ov.apply(&mut run);
            cmd_train(&run)?;
            Ok(())
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            config,
            direction,
            common,
        } => {
            let (mut run, ds) = dataset_arg(config.as_ref(), dataset.as_ref(), &common)?;
            if let Some(d) = direction {
                run.direction = d;
            }
            let report = cmd_evaluate(
                &checkpoint,
                &ds,
                run.direction,
                run.train.workers,
                common.out_dir.as_deref(),
            )?;
            println!(
                "mrr={:.4} hit1={:.4} hit3={:.4} hit10={:.4} count={}",
                report.mrr, report.hit1, report.hit3, report.hit10, report.count
            );
            Ok(())
        }
        Command::Ablate {
            config,
            variants,
            seeds,
            common,
        } => {
            let mut run = load_run_config(&config)?;
            common.to_overrides().apply(&mut run);
            let variants = if variants.is_empty() {
                AblationVariant::ALL.to_vec()
            } else {
                variants
            };
            let seeds = if seeds.is_empty() { vec![1, 2, 3] } else { seeds };
            let csv = cmd_ablate(&run, &variants, &seeds)?;
            println!("wrote {}", csv.display());
            Ok(())
        }
        Command::Hops {
            checkpoint,
            dataset,
            config,
            direction,
            common,
        } => {
            let (mut run, ds) = dataset_arg(config.as_ref(), dataset.as_ref(), &common)?;
            if let Some(d) = direction {
                run.direction = d;
            }
            let csv = cmd_hops(
                &checkpoint,
                &ds,
                run.direction,
                run.train.workers,
                common.out_dir.as_deref(),
            )?;
            println!("wrote {}", csv.display());
            Ok(())
        }
        Command::ProbeOrder {
            checkpoints,
            pairs,
            dataset,
            config,
            common,
        } => {
            let (_, ds) = dataset_arg(config.as_ref(), dataset.as_ref(), &common)?;
            let mut parsed = Vec::new();
            for spec in &checkpoints {
                let (label, path) = spec.split_once('=').unwrap_or(("model", spec.as_str()));
                parsed.push((label.to_string(), PathBuf::from(path)));
            }
            let csv = cmd_probe_order(&ProbeOrderArgs {
                checkpoints: parsed,
                pairs_file: &pairs,
                dataset: &ds,
                out_dir: common.out_dir.as_deref(),
            })?;
            println!("wrote {}", csv.display());
            Ok(())
        }
        Command::Extract {
            checkpoint,
            dataset,
            config,
            head,
            relation,
            answer,
            beam,
            common,
        } => {
            let (_, ds) = dataset_arg(config.as_ref(), dataset.as_ref(), &common)?;
            let text = cmd_extract(&ExtractArgs {
                checkpoint: &checkpoint,
                dataset: &ds,
                head: &head,
                relation: &relation,
                answer: answer.as_deref(),
                beam_width: beam,
                out_dir: common.out_dir.as_deref(),
            })?;
            print!("{text}");
            Ok(())
        }
        Command::Gradcheck {
            config,
            epsilon,
            tolerance,
            common,
        } => {
            let mut run = load_run_config(&config)?;
            common.to_overrides().apply(&mut run);
            print!("{}", cmd_gradcheck(&run, epsilon, tolerance)?);
            Ok(())
        }
        Command::ListPresets => {
            for name in preset_names() {
                let enc = preset(name).expect("listed presets exist");
                println!("{name}: n={} m={} d={} d_a={}", enc.n, enc.m, enc.d, enc.d_a);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
