//! Confusion matrices and precision / recall / F1 / accuracy reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts indexed by (true label, predicted label); labels in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn get(&self, truth: &str, predicted: &str) -> u64 {
        let i = self.labels.iter().position(|l| l == truth);
        let j = self.labels.iter().position(|l| l == predicted);
        match (i, j) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }
}

pub fn confusion<S: AsRef<str>>(truth: &[S], predicted: &[S]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Input(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Input("cannot evaluate zero rows".into()));
    }
    let mut labels: Vec<String> = truth
        .iter()
        .chain(predicted)
        .map(|s| s.as_ref().to_string())
        .collect();
    labels.sort();
    labels.dedup();
    let index = |s: &S| {
        labels
            .binary_search_by(|l| l.as_str().cmp(s.as_ref()))
            .unwrap()
    };
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (t, p) in truth.iter().zip(predicted) {
        counts[index(t)][index(p)] += 1;
    }
    Ok(ConfusionMatrix { labels, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub undefined: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    /// Support-weighted averages over classes.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let k = cm.labels.len();
    let total = cm.total();
    let mut classes = Vec::with_capacity(k);
    for (c, label) in cm.labels.iter().enumerate() {
        let tp = cm.counts[c][c];
        let support: u64 = cm.counts[c].iter().sum();
        let predicted: u64 = (0..k).map(|i| cm.counts[i][c]).sum();
        let mut undefined = Vec::new();
        let precision = ratio(tp, predicted).unwrap_or_else(|| {
            undefined.push("precision".to_string());
            0.0
        });
        let recall = ratio(tp, support).unwrap_or_else(|| {
            undefined.push("recall".to_string());
            0.0
        });
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            undefined.push("f1".to_string());
            0.0
        };
        classes.push(ClassMetrics {
            label: label.clone(),
            precision,
            recall,
            f1,
            support,
            undefined,
        });
    }
    let weighted = |get: fn(&ClassMetrics) -> f64| {
        if total == 0 {
            return 0.0;
        }
        classes
            .iter()
            .map(|c| c.support as f64 * get(c))
            .sum::<f64>()
            / total as f64
    };
    MetricsReport {
        precision: weighted(|c| c.precision),
        recall: weighted(|c| c.recall),
        f1: weighted(|c| c.f1),
        accuracy: ratio(cm.trace(), total).unwrap_or(0.0),
        total,
        classes,
        confusion: cm.clone(),
    }
}

impl MetricsReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.label == label)
    }

    pub const CSV_HEADER: &'static str = "method,w,a,Pr,Rc,F1,Acc";

    /// `method,w,a,Pr,Rc,F1,Acc`; `w` and `a` are left empty for raw features.
    pub fn csv_row(&self, method: &str, window: Option<usize>, step: Option<usize>) -> String {
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{method},{},{},{},{},{},{}",
            opt(window),
            opt(step),
            self.precision,
            self.recall,
            self.f1,
            self.accuracy
        )
    }
}
