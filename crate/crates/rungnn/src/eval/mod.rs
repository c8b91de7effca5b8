//! Filtered ranking metrics, hop-bucketed breakdowns, ablation variants,
//! order-sensitivity probes, and evidence-path extraction.

mod ablation;
mod evaluate;
mod evidence;
mod probe;
mod report;

pub use ablation::{apply_variant, AblationVariant};
pub use evaluate::{
    bucket_results, evaluate, hop_bucket_eval, BucketReport, Direction, EvalOutcome,
};
pub use evidence::{extract_evidence_paths, EvidenceOutcome, EvidencePath};
pub use probe::{order_sensitivity_probe, OrderProbeReport, OrderProbeRow};
pub use report::{evidence_to_text, write_labeled_metrics_csv, LabeledMetrics};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{EntityId, RelationId};
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no ranking results to aggregate")]
    EmptyResults,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Outcome of ranking one query's target among all entities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingResult {
    pub head: EntityId,
    pub relation: RelationId,
    pub target: EntityId,
    /// 1-based, tie-adjusted (ties share the mean rank, rounded up).
    pub rank: usize,
    /// Whether the target was inside the encoder's reached set.
    pub reached: bool,
}

/// Filtered MRR / Hit@K aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mrr: f64,
    pub hit1: f64,
    pub hit3: f64,
    pub hit10: f64,
    pub count: usize,
}

/// Rank a target given dense scores over the vocabulary. Entities in the
/// filter mask are removed before counting; the target itself must not be
/// masked. Ties resolve to the mean rank of the tied block, rounded up:
/// rank = 1 + |better| + ⌈|equal ∧ ≠target| / 2⌉.
pub fn rank_answer(
    scores: &[f64],
    target: EntityId,
    mask: &HashSet<EntityId>,
    head: EntityId,
    relation: RelationId,
    reached: bool,
) -> RankingResult {
    debug_assert!(!mask.contains(&target), "target must not be filtered");
    let target_score = scores[target.idx()];
    let mut better = 0usize;
    let mut equal = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if i == target.idx() || mask.contains(&EntityId(i as u32)) {
            continue;
        }
        if s > target_score {
            better += 1;
        } else if s == target_score {
            equal += 1;
        }
    }
    RankingResult {
        head,
        relation,
        target,
        rank: 1 + better + equal.div_ceil(2),
        reached,
    }
}

/// MRR = mean(1/rank); Hit@K = fraction with rank ≤ K.
pub fn compute_metrics(results: &[RankingResult]) -> Result<MetricsReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let n = results.len() as f64;
    let mrr = results.iter().map(|r| 1.0 / r.rank as f64).sum::<f64>() / n;
    let hit = |k: usize| results.iter().filter(|r| r.rank <= k).count() as f64 / n;
    Ok(MetricsReport {
        mrr,
        hit1: hit(1),
        hit3: hit(3),
        hit10: hit(10),
        count: results.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank_of(scores: &[f64], target: usize, mask: &[usize]) -> usize {
        let mask: HashSet<EntityId> = mask.iter().map(|&i| EntityId(i as u32)).collect();
        rank_answer(
            scores,
            EntityId(target as u32),
            &mask,
            EntityId(0),
            RelationId(0),
            true,
        )
        .rank
    }

    #[test]
    fn strictly_highest_score_ranks_first() {
        assert_eq!(rank_of(&[0.1, 0.9, 0.3], 1, &[]), 1);
    }

    #[test]
    fn all_zero_tie_takes_mean_rank_rounded_up() {
        // Target tied with 9 others at zero: 1 + ⌈9/2⌉ = 6.
        let scores = vec![0.0; 10];
        assert_eq!(rank_of(&scores, 4, &[]), 6);
    }

    #[test]
    fn filtering_removes_competitors() {
        let scores = [5.0, 4.0, 3.0, 2.0];
        assert_eq!(rank_of(&scores, 2, &[]), 3);
        assert_eq!(rank_of(&scores, 2, &[0]), 2);
        assert_eq!(rank_of(&scores, 2, &[0, 1]), 1);
    }

    /// Sort-based oracle under the same mean-rank tie policy.
    fn sort_oracle(scores: &[f64], target: usize, mask: &HashSet<usize>) -> usize {
        let mut kept: Vec<(usize, f64)> = scores
            .iter()
            .enumerate()
            .filter(|(i, _)| !mask.contains(i))
            .map(|(i, &s)| (i, s))
            .collect();
        kept.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let pos = kept.iter().position(|(i, _)| *i == target).unwrap();
        let score = kept[pos].1;
        let first = kept.iter().position(|(_, s)| *s == score).unwrap();
        let last = kept.iter().rposition(|(_, s)| *s == score).unwrap();
        // Mean of 1-based positions in the tied block, excluding nothing;
        // the target occupies the ceil of the block mean.
        let mean_times_two = (first + 1) + (last + 1);
        mean_times_two.div_ceil(2)
    }

    #[test]
    fn matches_sort_based_oracle_on_exhaustive_small_instances() {
        // All score vectors of length 5 with values from {0,1,2}.
        let vals = [0.0, 1.0, 2.0];
        let mut cases = 0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        for e in 0..3 {
                            let scores =
                                [vals[a], vals[b], vals[c], vals[d], vals[e]];
                            for target in 0..5 {
                                for mask_bits in 0..32u32 {
                                    if mask_bits & (1 << target) != 0 {
                                        continue;
                                    }
                                    let mask: HashSet<usize> = (0..5)
                                        .filter(|i| mask_bits & (1 << i) != 0)
                                        .collect();
                                    let want = sort_oracle(&scores, target, &mask);
                                    let mask_e: HashSet<EntityId> = mask
                                        .iter()
                                        .map(|&i| EntityId(i as u32))
                                        .collect();
                                    let got = rank_answer(
                                        &scores,
                                        EntityId(target as u32),
                                        &mask_e,
                                        EntityId(0),
                                        RelationId(0),
                                        true,
                                    )
                                    .rank;
                                    assert_eq!(got, want, "scores {scores:?} target {target} mask {mask:?}");
                                    cases += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!(cases > 10_000);
    }

    #[test]
    fn adding_a_filtered_competitor_never_worsens_rank() {
        let scores = [0.5, 0.9, 0.2, 0.7, 0.9];
        let target = 0;
        for extra in [1usize, 3, 4] {
            let base = rank_of(&scores, target, &[]);
            let filtered = rank_of(&scores, target, &[extra]);
            assert!(filtered <= base);
        }
    }

    #[test]
    fn metrics_arithmetic() {
        let results: Vec<RankingResult> = [1usize, 2, 4]
            .iter()
            .map(|&rank| RankingResult {
                head: EntityId(0),
                relation: RelationId(0),
                target: EntityId(0),
                rank,
                reached: true,
            })
            .collect();
        let m = compute_metrics(&results).unwrap();
        assert!((m.mrr - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-12);
        assert!((m.hit1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.hit3 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.hit10 - 1.0).abs() < 1e-12);
        assert_eq!(m.count, 3);
    }

    #[test]
    fn all_rank_one_maxes_every_metric() {
        let results: Vec<RankingResult> = (0..4)
            .map(|_| RankingResult {
                head: EntityId(0),
                relation: RelationId(0),
                target: EntityId(0),
                rank: 1,
                reached: true,
            })
            .collect();
        let m = compute_metrics(&results).unwrap();
        assert_eq!((m.mrr, m.hit1, m.hit10), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_results_error() {
        assert!(matches!(compute_metrics(&[]), Err(EvalError::EmptyResults)));
    }
}
