//! Property-based checks of the numeric core's contracts.

use std::collections::HashSet;
use std::rc::Rc;

use proptest::prelude::*;

use rungnn::eval::{rank_answer, compute_metrics, RankingResult};
use rungnn::kg::{EntityId, RelationId};
use rungnn::numerics::{ParamStore, Tape, Tensor};
use rungnn::training::multiclass_log_loss;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scatter_softmax_groups_sum_to_one(
        logits in prop::collection::vec(-30.0f64..30.0, 1..40),
        group_count in 1usize..6,
        seed in 0u64..1000,
    ) {
        let groups: Vec<usize> = logits
            .iter()
            .enumerate()
            .map(|(i, _)| ((seed as usize).wrapping_mul(31).wrapping_add(i * 7)) % group_count)
            .collect();
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::col_vector(&logits));
        let y = tape
            .scatter_softmax(x, Rc::new(groups.clone()), group_count)
            .unwrap();
        let vals = tape.value(y).data().to_vec();
        let mut sums = vec![0.0f64; group_count];
        let mut seen = vec![false; group_count];
        for (v, &g) in vals.iter().zip(groups.iter()) {
            prop_assert!(*v > 0.0 && *v <= 1.0);
            sums[g] += v;
            seen[g] = true;
        }
        for (sum, used) in sums.iter().zip(seen.iter()) {
            if *used {
                prop_assert!((sum - 1.0).abs() < 1e-6, "group sum {sum}");
            }
        }
    }

    #[test]
    fn backward_is_linear_in_the_loss_scale(
        values in prop::collection::vec(-3.0f64..3.0, 2..10),
        alpha in -4.0f64..4.0,
    ) {
        let mut store = ParamStore::new();
        let w = store.add("w", Tensor::row_vector(&values));
        let grad_of = |store: &mut ParamStore<f64>, scale: Option<f64>| {
            store.zero_grads();
            let mut tape = Tape::new();
            let v = tape.param(store, w);
            let sq = tape.hadamard(v, v).unwrap();
            let mut loss = tape.sum_all(sq).unwrap();
            if let Some(a) = scale {
                loss = tape.scale_const(loss, a).unwrap();
            }
            tape.backward(loss, store).unwrap();
            store.grad(w).data().to_vec()
        };
        let base = grad_of(&mut store, None);
        let scaled = grad_of(&mut store, Some(alpha));
        for (b, s) in base.iter().zip(scaled.iter()) {
            prop_assert_eq!(*s, *b * alpha);
        }
    }

    #[test]
    fn matmul_matches_naive_triple_loop(
        m in 1usize..5, k in 1usize..5, n in 1usize..5,
        seed in 0u64..500,
    ) {
        let fill = |rows: usize, cols: usize, salt: u64| -> Tensor<f64> {
            let data = (0..rows * cols)
                .map(|i| (((i as u64 + salt * 31 + seed) % 17) as f64 - 8.0) * 0.37)
                .collect();
            Tensor::from_vec(rows, cols, data).unwrap()
        };
        let a = fill(m, k, 1);
        let b = fill(k, n, 2);
        let c = a.matmul(&b).unwrap();
        for i in 0..m {
            for j in 0..n {
                let want: f64 = (0..k).map(|p| a.get(i, p) * b.get(p, j)).sum();
                prop_assert!((c.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_loss_is_nonnegative_and_uniform_case_is_log_n(
        scores in prop::collection::vec(-5.0f64..5.0, 2..30),
        answer_idx in 0usize..30,
    ) {
        let answer = EntityId((answer_idx % scores.len()) as u32);
        let loss = multiclass_log_loss(&scores, &[answer]).unwrap();
        prop_assert!(loss >= -1e-12);

        let uniform = vec![scores[0]; scores.len()];
        let u = multiclass_log_loss(&uniform, &[answer]).unwrap();
        prop_assert!((u - (scores.len() as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn rank_is_within_bounds_and_metrics_are_consistent(
        scores in prop::collection::vec(-2.0f64..2.0, 3..20),
        mask_bits in 0u32..128,
    ) {
        let n = scores.len();
        let target = 0usize;
        let mask: HashSet<EntityId> = (1..n)
            .filter(|i| i < &8 && mask_bits & (1 << i) != 0)
            .map(|i| EntityId(i as u32))
            .collect();
        let r = rank_answer(
            &scores,
            EntityId(target as u32),
            &mask,
            EntityId(0),
            RelationId(0),
            true,
        );
        prop_assert!(r.rank >= 1);
        prop_assert!(r.rank <= n - mask.len());

        let results: Vec<RankingResult> = (0..4)
            .map(|i| RankingResult {
                head: EntityId(0),
                relation: RelationId(0),
                target: EntityId(0),
                rank: r.rank + i,
                reached: true,
            })
            .collect();
        let m = compute_metrics(&results).unwrap();
        prop_assert!(m.hit1 <= m.hit3 && m.hit3 <= m.hit10);
        prop_assert!(m.hit1 <= m.mrr && m.mrr <= 1.0);
    }
}
