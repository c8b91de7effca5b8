//! Loss, batching, optimization, early stopping, and checkpoints.

mod checkpoint;
mod loss;
mod optimizer;
mod trainer;

pub use checkpoint::{
    checkpoint_info, load_checkpoint, save_checkpoint, LoadedCheckpoint, CHECKPOINT_VERSION,
};
pub use loss::{group_loss_on_tape, multiclass_log_loss};
pub use optimizer::Adam;
pub use trainer::{fit, train_epoch, EpochLog, EpochStats, FitOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{DatasetSplit, EntityId, RelationId};
use crate::model::ModelError;
use crate::numerics::{NumericsError, Precision};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}, query ({head}, {relation})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        head: usize,
        relation: usize,
    },
    #[error("query group has no answers")]
    EmptyAnswers,
    #[error("checkpoint {path}: {reason}")]
    BadCheckpoint { path: String, reason: String },
    #[error("checkpoint {path}: version {got}, this build reads {want}")]
    CheckpointVersion { path: String, got: u32, want: u32 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Optimization settings. Defaults: Adam at 5e−4, batches of 16 query
/// groups, up to 80 epochs with patience 5 on validation MRR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    /// Batch size in query groups.
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    pub precision: Precision,
    pub grad_clip: Option<f64>,
    pub workers: usize,
    /// Hide each training query's own answer edges (and inverses) from its
    /// subgraph, so the model cannot read the answer off the queried edge.
    pub exclude_query_edges: bool,
    /// Also train on inverse-direction queries (o, r⁻¹) → s.
    pub train_inverse_queries: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 80,
            batch_size: 16,
            patience: 5,
            seed: 0,
            precision: Precision::F64,
            grad_clip: None,
            workers: 1,
            exclude_query_edges: true,
            train_inverse_queries: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 || self.learning_rate.is_nan() {
            return Err(TrainError::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(TrainError::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(TrainError::InvalidConfig("patience must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(TrainError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(TrainError::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// All answers of one (head, relation) query; one encode serves them all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGroup {
    pub head: EntityId,
    pub relation: RelationId,
    pub answers: Vec<EntityId>,
}

/// Collapse training triples into query groups, optionally adding the
/// inverse-direction groups, in deterministic (head, relation) order.
pub fn group_queries(split: &DatasetSplit, include_inverse: bool) -> Vec<QueryGroup> {
    use std::collections::BTreeMap;
    let base = split.fact_graph.base_relation_count() as u32;
    let mut groups: BTreeMap<(EntityId, RelationId), Vec<EntityId>> = BTreeMap::new();
    for q in &split.train_queries {
        groups.entry((q.head, q.relation)).or_default().push(q.answer);
        if include_inverse {
            groups
                .entry((q.answer, RelationId(q.relation.0 + base)))
                .or_default()
                .push(q.head);
        }
    }
    groups
        .into_iter()
        .map(|((head, relation), mut answers)| {
            answers.sort_unstable();
            answers.dedup();
            QueryGroup {
                head,
                relation,
                answers,
            }
        })
        .collect()
}
