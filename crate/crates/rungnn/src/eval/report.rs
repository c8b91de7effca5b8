//! Machine-readable report writers: CSV rows with fixed field names and
//! the human-readable evidence-path text format.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::kg::Vocabulary;

use super::{EvalError, EvidencePath, MetricsReport};

/// A metrics row tagged with its slice labels.
#[derive(Debug, Clone)]
pub struct LabeledMetrics {
    pub bucket: Option<String>,
    pub variant: Option<String>,
    pub seed: Option<u64>,
    pub report: MetricsReport,
}

impl LabeledMetrics {
    pub fn plain(report: MetricsReport) -> Self {
        LabeledMetrics {
            bucket: None,
            variant: None,
            seed: None,
            report,
        }
    }
}

/// CSV with the fixed header `variant,seed,bucket,mrr,hit1,hit3,hit10,count`;
/// absent labels are empty fields.
pub fn write_labeled_metrics_csv(path: &Path, rows: &[LabeledMetrics]) -> Result<(), EvalError> {
    let io_err = |source: std::io::Error| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = fs::File::create(path).map_err(io_err)?;
    writeln!(out, "variant,seed,bucket,mrr,hit1,hit3,hit10,count").map_err(io_err)?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.variant.as_deref().unwrap_or(""),
            row.seed.map(|s| s.to_string()).unwrap_or_default(),
            row.bucket.as_deref().unwrap_or(""),
            row.report.mrr,
            row.report.hit1,
            row.report.hit3,
            row.report.hit10,
            row.report.count
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// `head -[relation:weight]-> mid -[relation:weight]-> answer  score=...`
pub fn evidence_to_text(path: &EvidencePath, vocab: &Vocabulary) -> String {
    let mut s = String::new();
    if path.triples.is_empty() {
        s.push_str("(empty path)");
    } else {
        s.push_str(vocab.entity_name(path.triples[0].head));
        for (t, w) in path.triples.iter().zip(path.weights.iter()) {
            s.push_str(&format!(
                " -[{}:{:.4}]-> {}",
                vocab.relation_display(t.relation),
                w,
                vocab.entity_name(t.tail)
            ));
        }
    }
    s.push_str(&format!("  score={:.6}", path.score));
    s
}
