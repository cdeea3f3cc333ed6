//! Confusion matrices, precision/recall/F, and ROC AUC.

use serde::{Deserialize, Serialize};

/// Counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(n_classes: usize, actual: &[usize], predicted: &[usize]) -> Self {
        let mut m = Self::new(n_classes);
        for (&a, &p) in actual.iter().zip(predicted) {
            m.counts[a][p] += 1;
        }
        m
    }

    /// Binary matrix from the usual four cells; class 1 is positive.
    pub fn binary(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![tn, fp], vec![fn_, tp]],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn accuracy(&self) -> f64 {
        safe_div(self.trace() as f64, self.total() as f64)
    }

    /// Precision, recall, and F of one class treated as positive.
    pub fn class_scores(&self, class: usize) -> (f64, f64, f64) {
        let tp = self.counts[class][class] as f64;
        let predicted: usize = self.counts.iter().map(|row| row[class]).sum();
        let actual: usize = self.counts[class].iter().sum();
        let p = safe_div(tp, predicted as f64);
        let r = safe_div(tp, actual as f64);
        (p, r, f_measure(p, r))
    }

    /// Positive-class scores for two classes, macro averages otherwise.
    pub fn summary_scores(&self) -> (f64, f64, f64) {
        if self.n_classes() == 2 {
            return self.class_scores(1);
        }
        let k = self.n_classes() as f64;
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for c in 0..self.n_classes() {
            let (cp, cr, cf) = self.class_scores(c);
            p += cp;
            r += cr;
            f += cf;
        }
        (p / k, r / k, f / k)
    }
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    safe_div(2.0 * precision * recall, precision + recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f_measure: f64,
    pub precision: f64,
    pub recall: f64,
    /// Absent for multi-class tasks.
    pub roc_auc: Option<f64>,
}

impl Metrics {
    pub fn from_confusion(m: &ConfusionMatrix, roc_auc: Option<f64>) -> Self {
        let (precision, recall, f_measure) = m.summary_scores();
        Metrics {
            accuracy: m.accuracy(),
            f_measure,
            precision,
            recall,
            roc_auc,
        }
    }

    pub fn mean(items: &[Metrics]) -> Metrics {
        let n = items.len().max(1) as f64;
        let avg = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        let aucs: Vec<f64> = items.iter().filter_map(|m| m.roc_auc).collect();
        Metrics {
            accuracy: avg(|m| m.accuracy),
            f_measure: avg(|m| m.f_measure),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            roc_auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
        }
    }
}

/// Area under the ROC curve of `scores` for the positive flags, by sweeping
/// the threshold over distinct scores and integrating with the trapezoid rule.
/// Tied scores contribute a diagonal segment. `None` if either class is absent.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / pos as f64;
        let fpr = fp as f64 / neg as f64;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Some(area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_binary() {
        let m = ConfusionMatrix::binary(8, 2, 1, 9);
        let (p, r, f) = m.class_scores(1);
        assert!((p - 8.0 / 9.0).abs() < 1e-12);
        assert!((r - 0.8).abs() < 1e-12);
        let expect = 2.0 * (8.0 / 9.0 * 0.8) / (8.0 / 9.0 + 0.8);
        assert!((f - expect).abs() < 1e-12);
        assert_eq!(m.accuracy(), 17.0 / 20.0);
    }

    #[test]
    fn macro_average() {
        let m = ConfusionMatrix {
            counts: vec![vec![2, 0, 0], vec![0, 1, 1], vec![0, 0, 2]],
        };
        let (p, r, _) = m.summary_scores();
        assert!((p - (1.0 + 1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!((r - (1.0 + 0.5 + 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators() {
        let m = ConfusionMatrix::binary(0, 0, 0, 5);
        assert_eq!(m.class_scores(1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn auc_cases() {
        assert_eq!(
            roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]),
            Some(1.0)
        );
        assert_eq!(
            roc_auc(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]),
            Some(0.0)
        );
        assert_eq!(roc_auc(&[0.5; 4], &[true, false, true, false]), Some(0.5));
        assert_eq!(roc_auc(&[0.5, 0.4], &[true, true]), None);
        // One inversion among four pairs.
        assert_eq!(
            roc_auc(&[0.9, 0.3, 0.5, 0.1], &[true, true, false, false]),
            Some(0.75)
        );
    }
}
