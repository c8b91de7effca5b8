//! The progressive relational GNN: gated fusion unit, gated graph attention
//! layers, exploration + buffer encoder, entity scorer, and probes.

mod encoder;
mod ggat;
mod probe;
mod qrfgu;

pub use encoder::{
    encode, encode_states, score_dense, score_entities, score_on_tape, EncodeOptions, Encoding,
    EntityStateTable, LayerAttention,
};
pub use ggat::{
    aggregate, attention, compute_messages, update_states, EdgeBatch, LayerStates, Messages,
};
pub use probe::encode_relation_path;
pub use qrfgu::qrfgu;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{NumericsError, ParamId, ParamStore, Scalar, Tensor};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("entity index {0} out of range")]
    InvalidEntity(usize),
    #[error("relation index {0} out of range")]
    InvalidRelation(usize),
    #[error("relation path must be non-empty")]
    EmptyPath,
    #[error("internal frontier invariant violated: head entity {0} has no state")]
    MissingHeadState(usize),
}

/// Nonlinearity applied to the aggregated candidate states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Phi {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl std::str::FromStr for Phi {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Phi::Relu),
            "tanh" => Ok(Phi::Tanh),
            "identity" | "none" => Ok(Phi::Identity),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

/// How edge messages fuse head state and relation embedding. The gated unit
/// is the full model; addition and multiplication are the query-independent
/// ablations, which also share one relation table across layers so their
/// path encodings are order-invariant by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    #[default]
    Qrfgu,
    Addition,
    Multiplication,
}

impl MessageKind {
    pub fn shares_relation_table(self) -> bool {
        !matches!(self, MessageKind::Qrfgu)
    }
}

/// Encoder depth and widths: n exploration layers over a growing subgraph,
/// m buffer layers over the final subgraph, embedding width d, attention
/// width d_a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub d_a: usize,
    #[serde(default)]
    pub phi: Phi,
}

impl EncoderConfig {
    pub fn new(n: usize, m: usize, d: usize) -> Self {
        EncoderConfig {
            n,
            m,
            d,
            d_a: d,
            phi: Phi::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n < 1 {
            return Err(ModelError::InvalidConfig("n must be >= 1".into()));
        }
        if self.d < 1 || self.d_a < 1 {
            return Err(ModelError::InvalidConfig("d and d_a must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_layers(&self) -> usize {
        self.n + self.m
    }
}

/// Everything needed to rebuild the network: depths, message function,
/// and the augmented relation count it was sized for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub message: MessageKind,
    /// Augmented relation count (2·|R| + 1) the tables are sized for.
    pub num_relations: usize,
}

/// One gated fusion unit: W_u, W_f are d×3d over [h_rule, h_msg, h_q],
/// W_c is d×d, biases are 1×d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrfguParams {
    pub w_u: ParamId,
    pub w_f: ParamId,
    pub w_c: ParamId,
    pub b_u: ParamId,
    pub b_f: ParamId,
    pub b_c: ParamId,
}

/// One gated attention layer: a message fusion unit, an update fusion unit,
/// attention weights (W_a: 1×d_a, W_s, W_q: d_a×d) and this layer's relation
/// embedding table ((2|R|+1)×d, the query relation's row included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgatLayerParams {
    pub message_qrfgu: QrfguParams,
    pub update_qrfgu: QrfguParams,
    pub w_a: ParamId,
    pub w_s: ParamId,
    pub w_q: ParamId,
    pub relation_table: ParamId,
}

/// Parameter handles for the full network: n+m layers plus the 1×d scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub layers: Vec<GgatLayerParams>,
    pub w_score: ParamId,
}

/// A runnable model: config, parameter layout, and the value store.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    pub config: ModelConfig,
    pub params: ModelParameters,
    pub store: ParamStore<T>,
}

impl<T: Scalar> Model<T> {
    /// Initialize weights uniformly in [−1/√d, +1/√d] with zero biases,
    /// drawn from a seeded generator so runs are reproducible. The ablation
    /// message variants reuse one relation table for every layer.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.encoder.validate()?;
        if config.num_relations == 0 {
            return Err(ModelError::InvalidConfig(
                "augmented relation count must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = config.encoder.d;
        let d_a = config.encoder.d_a;
        let rels = config.num_relations;

        let mut uniform = |store: &mut ParamStore<T>, name: String, rows: usize, cols: usize| {
            let bound = 1.0 / (d as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| T::from_f64(rng.random_range(-bound..=bound)))
                .collect();
            store.add(name, Tensor::from_vec(rows, cols, data).expect("init shape"))
        };
        let zero_bias = |store: &mut ParamStore<T>, name: String| {
            store.add(name, Tensor::zeros(1, d))
        };

        let shared_table = if config.message.shares_relation_table() {
            Some(uniform(&mut store, "relations.shared".into(), rels, d))
        } else {
            None
        };

        let mut layers = Vec::with_capacity(config.encoder.total_layers());
        for l in 0..config.encoder.total_layers() {
            let mut qrfgu_params = |store: &mut ParamStore<T>, role: &str| QrfguParams {
                w_u: uniform(store, format!("layer{l}.{role}.w_u"), d, 3 * d),
                w_f: uniform(store, format!("layer{l}.{role}.w_f"), d, 3 * d),
                w_c: uniform(store, format!("layer{l}.{role}.w_c"), d, d),
                b_u: zero_bias(store, format!("layer{l}.{role}.b_u")),
                b_f: zero_bias(store, format!("layer{l}.{role}.b_f")),
                b_c: zero_bias(store, format!("layer{l}.{role}.b_c")),
            };
            let message_qrfgu = qrfgu_params(&mut store, "msg");
            let update_qrfgu = qrfgu_params(&mut store, "upd");
            let w_a = uniform(&mut store, format!("layer{l}.w_a"), 1, d_a);
            let w_s = uniform(&mut store, format!("layer{l}.w_s"), d_a, d);
            let w_q = uniform(&mut store, format!("layer{l}.w_q"), d_a, d);
            let relation_table = match shared_table {
                Some(id) => id,
                None => uniform(&mut store, format!("layer{l}.relations"), rels, d),
            };
            layers.push(GgatLayerParams {
                message_qrfgu,
                update_qrfgu,
                w_a,
                w_s,
                w_q,
                relation_table,
            });
        }
        let w_score = uniform(&mut store, "w_score".into(), 1, d);

        Ok(Model {
            config,
            params: ModelParameters { layers, w_score },
            store,
        })
    }

    pub fn encoder(&self) -> &EncoderConfig {
        &self.config.encoder
    }
}
