//! Run configuration: JSON file, dataset presets, and flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::{AblationVariant, Direction};
use crate::kg::synthetic::SyntheticSpec;
use crate::kg::{load_dataset_dir, load_inductive_dataset, DatasetSplit};
use crate::model::EncoderConfig;
use crate::numerics::Precision;
use crate::training::TrainConfig;

use super::CliError;

/// Environment variable naming the default run directory.
pub const RUN_DIR_ENV: &str = "RUNGNN_RUN_DIR";

/// Where the triples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    /// Transductive directory with train.txt, valid.txt, test.txt.
    Dir { path: PathBuf },
    /// Inductive pair: training directory plus a disjoint-entity test
    /// directory holding fact (train.txt) and prediction (test.txt) files.
    Inductive {
        train_dir: PathBuf,
        test_dir: PathBuf,
    },
    /// Built-in seeded generator.
    Synthetic { spec: SyntheticSpec },
}

impl DatasetConfig {
    pub fn load(&self) -> Result<DatasetSplit, CliError> {
        match self {
            DatasetConfig::Dir { path } => Ok(load_dataset_dir(path)?),
            DatasetConfig::Inductive { train_dir, test_dir } => {
                // The training split drives training; evaluation against the
                // disjoint test graph goes through `load_inductive_dataset`
                // directly where both splits are needed.
                let (train, _) = load_inductive_dataset(train_dir, test_dir)?;
                Ok(train)
            }
            DatasetConfig::Synthetic { spec } => Ok(spec.generate().split),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let check_dir = |p: &Path| -> Result<(), CliError> {
            if !p.is_dir() {
                return Err(CliError::Validation(format!(
                    "dataset directory {} does not exist",
                    p.display()
                )));
            }
            Ok(())
        };
        match self {
            DatasetConfig::Dir { path } => check_dir(path),
            DatasetConfig::Inductive { train_dir, test_dir } => {
                check_dir(train_dir)?;
                check_dir(test_dir)
            }
            DatasetConfig::Synthetic { spec } => {
                if spec.units == 0 {
                    return Err(CliError::Validation("synthetic spec needs units > 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// Full run description; one file drives every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub variant: AblationVariant,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.dataset.validate()?;
        self.encoder.validate().map_err(CliError::validation)?;
        self.train.validate().map_err(CliError::validation)?;
        // Sanity rails for desk-scale runs.
        if self.encoder.n > 10 {
            return Err(CliError::Validation("n must be <= 10".into()));
        }
        if self.encoder.d > 256 || self.encoder.d_a > 256 {
            return Err(CliError::Validation("d and d_a must be <= 256".into()));
        }
        Ok(())
    }

    /// Output directory: config value, else $RUNGNN_RUN_DIR, else ./runs.
    pub fn resolve_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var(RUN_DIR_ENV) {
            return PathBuf::from(dir);
        }
        PathBuf::from("runs")
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub precision: Option<Precision>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub variant: Option<AblationVariant>,
    pub direction: Option<Direction>,
    pub epochs: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        // The run seed drives both init and shuffling.
        config.train.seed = config.seed;
        if let Some(p) = self.precision {
            config.train.precision = p;
        }
        if let Some(w) = self.workers {
            config.train.workers = w;
        }
        if let Some(dir) = &self.out_dir {
            config.out_dir = Some(dir.clone());
        }
        if let Some(v) = self.variant {
            config.variant = v;
        }
        if let Some(d) = self.direction {
            config.direction = d;
        }
        if let Some(e) = self.epochs {
            config.train.epochs = e;
        }
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("parse {}: {e}", path.display())))
}

/// Hyperparameter presets: (n, m, d), with d_a = d.
pub fn preset(name: &str) -> Option<EncoderConfig> {
    let (n, m, d) = match name {
        "wn18rr" => (8, 3, 64),
        "fb15k-237" => (6, 3, 48),
        "nell-995" => (6, 3, 48),
        "yago3-10" => (4, 2, 32),
        "analysis" => (5, 3, 64),
        "umls" => (5, 2, 64),
        "family" => (3, 2, 64),
        _ => return None,
    };
    Some(EncoderConfig::new(n, m, d))
}

pub fn preset_names() -> &'static [&'static str] {
    &[
        "wn18rr",
        "fb15k-237",
        "nell-995",
        "yago3-10",
        "analysis",
        "umls",
        "family",
    ]
}
