//! Filtered evaluation over a query set, with optional hop-distance
//! bucketing of the results.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kg::{hop_distances, DatasetSplit, EntityId, Query, RelationId};
use crate::model::{encode, score_dense, EncodeOptions, Model};
use crate::numerics::{Scalar, Tape};

use super::{compute_metrics, rank_answer, EvalError, MetricsReport, RankingResult};

/// Whether each test triple is ranked as tail prediction only, or also as
/// head prediction through the inverse relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    Both,
    TailOnly,
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(Direction::Both),
            "tail-only" | "tail" => Ok(Direction::TailOnly),
            other => Err(format!("unknown direction '{other}'")),
        }
    }
}

/// Aggregate report plus the per-query ranks behind it.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: MetricsReport,
    pub results: Vec<RankingResult>,
}

/// Rank every query (and its inverse under [`Direction::Both`]) with
/// filtering against all known-true answers. Runs queries in parallel on
/// the current rayon pool; results keep query order, so aggregate numbers
/// are independent of worker count.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    split: &DatasetSplit,
    queries: &[Query],
    direction: Direction,
) -> Result<EvalOutcome, EvalError> {
    let kg = &split.fact_graph;
    let base = kg.base_relation_count() as u32;
    let mut directed: Vec<Query> = Vec::with_capacity(2 * queries.len());
    for q in queries {
        directed.push(*q);
        if direction == Direction::Both && q.relation.idx() < base as usize {
            directed.push(Query {
                head: q.answer,
                relation: RelationId(q.relation.0 + base),
                answer: q.head,
            });
        }
    }

    let results: Vec<Result<RankingResult, EvalError>> = directed
        .par_iter()
        .map(|q| rank_one(model, split, q))
        .collect();
    let results: Vec<RankingResult> = results.into_iter().collect::<Result<_, _>>()?;
    Ok(EvalOutcome {
        report: compute_metrics(&results)?,
        results,
    })
}

fn rank_one<T: Scalar>(
    model: &Model<T>,
    split: &DatasetSplit,
    q: &Query,
) -> Result<RankingResult, EvalError> {
    let kg = &split.fact_graph;
    let mut tape = Tape::new();
    let encoding = encode(
        &mut tape,
        model,
        kg,
        q.head,
        q.relation,
        &EncodeOptions::default(),
    )?;
    let dense = score_dense(&mut tape, model, &encoding, kg.num_entities())?;
    let scores: Vec<f64> = dense.iter().map(|s| s.to_f64()).collect();
    let reached = encoding.entities.contains(&q.answer);
    let mask: HashSet<EntityId> = split
        .known_answers(q.head, q.relation)
        .iter()
        .copied()
        .filter(|&o| o != q.answer)
        .collect();
    Ok(rank_answer(
        &scores, q.answer, &mask, q.head, q.relation, reached,
    ))
}

/// One hop-distance bucket of an evaluation.
#[derive(Debug, Clone)]
pub struct BucketReport {
    /// "1".."6" for exact distances, "other" for 0, 7+, and unreachable.
    pub bucket: String,
    pub report: MetricsReport,
}

/// Bucket ranked queries by the BFS distance from query head to target on
/// the augmented fact graph. Buckets cover 1..=6 hops; everything else
/// (self-answers, 7+, unreachable) lands in "other". Bucket counts always
/// sum to the total query count.
pub fn hop_bucket_eval<T: Scalar>(
    model: &Model<T>,
    split: &DatasetSplit,
    queries: &[Query],
    direction: Direction,
) -> Result<(EvalOutcome, Vec<BucketReport>), EvalError> {
    let outcome = evaluate(model, split, queries, direction)?;
    let buckets = bucket_results(split, &outcome.results)?;
    Ok((outcome, buckets))
}

/// Bucket existing results without re-running the model.
pub fn bucket_results(
    split: &DatasetSplit,
    results: &[RankingResult],
) -> Result<Vec<BucketReport>, EvalError> {
    let kg = &split.fact_graph;
    let distances: Vec<(usize, Option<u32>)> = results
        .par_iter()
        .enumerate()
        .map(|(i, r)| (i, hop_distances(kg, r.head)[r.target.idx()]))
        .collect();
    let mut grouped: Vec<Vec<RankingResult>> = vec![Vec::new(); 7];
    for (i, d) in distances {
        let slot = match d {
            Some(h) if (1..=6).contains(&h) => (h - 1) as usize,
            _ => 6,
        };
        grouped[slot].push(results[i]);
    }
    let mut reports = Vec::new();
    for (slot, members) in grouped.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let label = if slot < 6 {
            format!("{}", slot + 1)
        } else {
            "other".to_string()
        };
        reports.push(BucketReport {
            bucket: label,
            report: compute_metrics(&members)?,
        });
    }
    Ok(reports)
}
