//! Knowledge-graph link prediction with a progressive relational GNN.
//!
//! The encoder explores an expanding subgraph around the query head: layer i
//! updates only the entities within i hops, fusing relation messages through
//! gated units so that the ORDER of composed relations changes the encoding.
//! Extra buffer layers re-propagate on the final subgraph so that entities
//! reached late still receive rule information held by earlier entities.
//! A linear decoder scores every reached entity; unreached entities score
//! exactly zero.
//!
//! The crate is organized around that pipeline:
//!
//! - [`kg`]: triple stores, augmentation (inverse + identity edges),
//!   frontiers, dataset splits, and seeded synthetic rule generators
//! - [`numerics`]: tensors, the reverse-mode tape, and a finite-difference
//!   gradient checker
//! - [`model`]: the gated fusion unit, gated attention layers, progressive
//!   encoder, scorer, and diagnostic probes
//! - [`training`]: multi-class log-loss, Adam, epoch loop, early stopping,
//!   checkpoints
//! - [`eval`]: filtered MRR / Hit@K, hop-bucketed breakdowns, ablation
//!   variants, order-sensitivity probes, and evidence-path extraction
//! - [`cli`]: the `rungnn` command surface over a single JSON config
//!
//! See the `examples/` directory for one runnable example per capability;
//! `cargo run --bin rungnn -- --help` lists the operator commands.

pub mod cli;
pub mod eval;
pub mod kg;
pub mod model;
pub mod training;
pub mod numerics;
