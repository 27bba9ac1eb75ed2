use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::featuremap::EmotionLabel;

use super::mlp::NUM_CLASSES;

/// Test-set accuracy and a row-normalized confusion matrix.
///
/// Rows are true classes and columns predictions, both in label ordinal
/// order. Rows for classes absent from the evaluated set are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class_accuracy: [f64; NUM_CLASSES],
    /// Row percentages; each populated row sums to 100.
    pub confusion: [[f64; NUM_CLASSES]; NUM_CLASSES],
    pub confusion_counts: [[usize; NUM_CLASSES]; NUM_CLASSES],
    pub class_counts: [usize; NUM_CLASSES],
    pub total: usize,
}

impl EvalReport {
    /// Builds the report from `(truth, prediction)` ordinal pairs.
    pub fn from_predictions(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut counts = [[0usize; NUM_CLASSES]; NUM_CLASSES];
        for (t, p) in pairs {
            counts[t][p] += 1;
        }
        let class_counts: [usize; NUM_CLASSES] = std::array::from_fn(|i| counts[i].iter().sum());
        let total: usize = class_counts.iter().sum();
        let correct: usize = (0..NUM_CLASSES).map(|i| counts[i][i]).sum();
        let confusion = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if class_counts[i] == 0 {
                    0.0
                } else {
                    100.0 * counts[i][j] as f64 / class_counts[i] as f64
                }
            })
        });
        let per_class_accuracy = std::array::from_fn(|i| {
            if class_counts[i] == 0 {
                0.0
            } else {
                counts[i][i] as f64 / class_counts[i] as f64
            }
        });
        Self {
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            per_class_accuracy,
            confusion,
            confusion_counts: counts,
            class_counts,
            total,
        }
    }

    /// `Emotion,Anger,...,Sadness` header then one percentage row per class.
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("Emotion");
        for l in EmotionLabel::ALL {
            s.push(',');
            s.push_str(l.title());
        }
        s.push('\n');
        for (l, row) in EmotionLabel::ALL.iter().zip(&self.confusion) {
            s.push_str(l.title());
            for v in row {
                write!(s, ",{v:.2}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width confusion table for terminal output.
    pub fn confusion_table(&self) -> String {
        let mut s = String::new();
        write!(s, "{:<10}", "Emotion:").unwrap();
        for l in EmotionLabel::ALL {
            write!(s, "{:>10}", l.title()).unwrap();
        }
        s.push('\n');
        for (l, row) in EmotionLabel::ALL.iter().zip(&self.confusion) {
            write!(s, "{:<10}", l.title()).unwrap();
            for v in row {
                write!(s, "{v:>10.2}").unwrap();
            }
            s.push('\n');
        }
        writeln!(s, "accuracy: {:.2}%  ({} examples)", 100.0 * self.accuracy, self.total).unwrap();
        s
    }
}
