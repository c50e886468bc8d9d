//! Dataset-level labels and classification metrics.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::pipeline::{ClaimEvaluation, EvalStatus};
use crate::scoring::{NliLabel, NliVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeverLabel {
    #[serde(rename = "SUPPORTS")]
    Supports,
    #[serde(rename = "REFUTES")]
    Refutes,
    #[serde(rename = "NOT ENOUGH INFO")]
    NotEnoughInfo,
}

impl FeverLabel {
    /// Row and column order of the confusion matrix.
    pub const ALL: [FeverLabel; 3] = [
        FeverLabel::Supports,
        FeverLabel::Refutes,
        FeverLabel::NotEnoughInfo,
    ];

    pub fn index(self) -> usize {
        match self {
            FeverLabel::Supports => 0,
            FeverLabel::Refutes => 1,
            FeverLabel::NotEnoughInfo => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeverLabel::Supports => "SUPPORTS",
            FeverLabel::Refutes => "REFUTES",
            FeverLabel::NotEnoughInfo => "NOT ENOUGH INFO",
        }
    }
}

impl core::fmt::Display for FeverLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledClaim {
    pub claim: String,
    pub gold: FeverLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_hint: Option<Vec<String>>,
}

/// Optional minimum probabilities for the decisive labels. Both are off by
/// default, leaving a plain argmax.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    pub support_min_e: Option<f64>,
    pub refute_min_c: Option<f64>,
}

/// Maps a verdict to a label: entailment supports, contradiction refutes,
/// neutral and exact ties give NOT ENOUGH INFO.
pub fn label_for_verdict(v: &NliVerdict, t: &LabelThresholds) -> FeverLabel {
    match v.argmax() {
        NliLabel::Entailment if t.support_min_e.is_none_or(|m| v.entailment >= m) => {
            FeverLabel::Supports
        }
        NliLabel::Contradiction if t.refute_min_c.is_none_or(|m| v.contradiction >= m) => {
            FeverLabel::Refutes
        }
        _ => FeverLabel::NotEnoughInfo,
    }
}

/// Total mapping from an evaluation to a dataset label.
pub fn map_label(eval: &ClaimEvaluation, t: &LabelThresholds) -> FeverLabel {
    match (&eval.status, &eval.verdict) {
        (EvalStatus::Ok, Some(v)) => label_for_verdict(v, t),
        _ => FeverLabel::NotEnoughInfo,
    }
}

/// Counts indexed `[gold][predicted]` in [`FeverLabel::ALL`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; 3]; 3]);

impl ConfusionMatrix {
    pub fn add(&mut self, gold: FeverLabel, predicted: FeverLabel) {
        self.0[gold.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.0.iter_mut().zip(other.0.iter()) {
            for (c, x) in row.iter_mut().zip(o.iter()) {
                *c += x;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.0[i][i]).sum()
    }

    /// Gold count for a label.
    pub fn support(&self, label: FeverLabel) -> u64 {
        self.0[label.index()].iter().sum()
    }

    /// Predicted count for a label.
    pub fn predicted(&self, label: FeverLabel) -> u64 {
        self.0.iter().map(|r| r[label.index()]).sum()
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::from_confusion(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: FeverLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// No predictions of this label; precision reported as 0.
    pub precision_undefined: bool,
    /// No gold items of this label; recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_label: [LabelMetrics; 3],
    pub weighted: Averages,
    pub accuracy: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let mut warnings = Vec::new();
        let per_label = FeverLabel::ALL.map(|label| {
            let i = label.index();
            let tp = confusion.0[i][i];
            let support = confusion.support(label);
            let predicted = confusion.predicted(label);
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            if precision.is_none() {
                warnings.push(alloc::format!(
                    "precision undefined for {label}: no predictions"
                ));
            }
            if recall.is_none() {
                warnings.push(alloc::format!(
                    "recall undefined for {label}: no gold items"
                ));
            }
            let (p, r) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
            // 2tp / (2tp + fp + fn), equal to the harmonic mean when defined.
            let f1 = ratio(2 * tp, predicted + support).unwrap_or(0.0);
            LabelMetrics {
                label,
                precision: p,
                recall: r,
                f1,
                support,
                precision_undefined: precision.is_none(),
                recall_undefined: recall.is_none(),
            }
        });
        let total = confusion.total();
        let weighted = if total == 0 {
            Averages {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        } else {
            let w = |f: fn(&LabelMetrics) -> f64| {
                per_label
                    .iter()
                    .map(|m| m.support as f64 * f(m))
                    .sum::<f64>()
                    / total as f64
            };
            Averages {
                precision: w(|m| m.precision),
                recall: w(|m| m.recall),
                f1: w(|m| m.f1),
            }
        };
        Metrics {
            per_label,
            weighted,
            accuracy: ratio(confusion.trace(), total).unwrap_or(0.0),
            total,
            confusion,
            warnings,
        }
    }

    pub fn label(&self, label: FeverLabel) -> &LabelMetrics {
        &self.per_label[label.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("gold has {gold} items but {predicted} predictions were given")]
    LengthMismatch { gold: usize, predicted: usize },
}

pub fn score_labels(
    gold: &[FeverLabel],
    predicted: &[FeverLabel],
) -> Result<Metrics, MetricsError> {
    if gold.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(predicted) {
        m.add(*g, *p);
    }
    Ok(m.metrics())
}

pub fn score_dataset(
    gold: &[LabeledClaim],
    predicted: &[FeverLabel],
) -> Result<Metrics, MetricsError> {
    let labels: Vec<FeverLabel> = gold.iter().map(|c| c.gold).collect();
    score_labels(&labels, predicted)
}
