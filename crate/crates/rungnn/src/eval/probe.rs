//! Order-sensitivity probe: how far apart are the encodings of a relation
//! pair composed in the two possible orders?

use crate::kg::RelationId;
use crate::model::{encode_relation_path, Model};
use crate::numerics::Scalar;

use super::EvalError;

/// Cosine distance between the two orderings of one relation pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderProbeRow {
    pub r1: RelationId,
    pub r2: RelationId,
    pub cosine_distance: f64,
}

#[derive(Debug, Clone)]
pub struct OrderProbeReport {
    pub rows: Vec<OrderProbeRow>,
}

impl OrderProbeReport {
    pub fn mean(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.cosine_distance).sum::<f64>() / self.rows.len() as f64
    }

    pub fn median(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let mut d: Vec<f64> = self.rows.iter().map(|r| r.cosine_distance).collect();
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        }
    }
}

/// Encode [r1, r2] and [r2, r1] through the model's message fold and report
/// their cosine distance, per pair. The identity relation serves as the
/// neutral query context for every fold.
pub fn order_sensitivity_probe<T: Scalar>(
    model: &Model<T>,
    pairs: &[(RelationId, RelationId)],
) -> Result<OrderProbeReport, EvalError> {
    // Identity relation sits at the last table row by construction.
    let query = RelationId((model.config.num_relations - 1) as u32);
    let mut rows = Vec::with_capacity(pairs.len());
    for &(r1, r2) in pairs {
        let fwd = encode_relation_path(model, &[r1, r2], query)?;
        let rev = encode_relation_path(model, &[r2, r1], query)?;
        rows.push(OrderProbeRow {
            r1,
            r2,
            cosine_distance: cosine_distance(
                &fwd.iter().map(|x| x.to_f64()).collect::<Vec<_>>(),
                &rev.iter().map(|x| x.to_f64()).collect::<Vec<_>>(),
            ),
        });
    }
    Ok(OrderProbeReport { rows })
}

/// 1 − cos(a, b). Identical vectors (zero vectors included) have distance
/// exactly 0; a zero vector against a nonzero one is maximally far
/// (distance 1).
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        0.0
    } else if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        1.0 - dot / (na * nb)
    }
}
