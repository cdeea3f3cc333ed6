//! k-fold cross-validated evaluation and report rendering.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{roc_auc, ConfusionMatrix, Metrics};
use super::model::{train, ModelParams};
use super::{derive_seed, kfold_split, Dataset, ModelKind, Task, Variant};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_size: usize,
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub task: Task,
    pub variant: Variant,
    pub classes: Vec<String>,
    pub n: usize,
    pub width: usize,
    pub k: usize,
    pub stratified: bool,
    pub seed: u64,
    pub params: ModelParams,
    pub folds: Vec<FoldReport>,
    /// Unweighted mean of the per-fold metrics.
    pub mean: Metrics,
    /// Metrics of the summed confusion matrix; AUC over all held-out scores.
    pub pooled: Metrics,
    pub confusion: ConfusionMatrix,
}

struct FoldOutcome {
    test: Vec<usize>,
    predicted: Vec<usize>,
    positive_scores: Vec<f64>,
}

/// Trains on `k - 1` folds and tests on the remaining one, for every fold.
/// Folds run in parallel; fold `i` trains with `derive_seed(seed, i)`.
pub fn evaluate_cv(
    kind: ModelKind,
    data: &Dataset,
    k: usize,
    seed: u64,
    params: &ModelParams,
) -> Result<ModelReport> {
    data.validate()?;
    let folds = kfold_split(&data.labels, k, seed)?;
    let n_classes = data.task.n_classes();

    let outcomes = (0..folds.k())
        .into_par_iter()
        .map(|i| -> Result<FoldOutcome> {
            let train_set = data.subset_rows(&folds.train_indices(i));
            let model = train(kind, &train_set, params, derive_seed(seed, i as u64))?;
            let test = folds.folds[i].clone();
            let mut predicted = Vec::with_capacity(test.len());
            let mut positive_scores = Vec::with_capacity(test.len());
            for &t in &test {
                let p = model.predict(&data.rows[t])?;
                predicted.push(p.class);
                positive_scores.push(p.scores[n_classes - 1]);
            }
            Ok(FoldOutcome {
                test,
                predicted,
                positive_scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let binary = data.task.is_binary();
    let auc = |idx: &[usize], scores: &[f64]| -> Option<f64> {
        if !binary {
            return None;
        }
        let positive: Vec<bool> = idx.iter().map(|&i| data.labels[i] == 1).collect();
        roc_auc(scores, &positive)
    };

    let mut total = ConfusionMatrix::new(n_classes);
    let mut all_idx = Vec::new();
    let mut all_scores = Vec::new();
    let mut fold_reports = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        let actual: Vec<usize> = o.test.iter().map(|&t| data.labels[t]).collect();
        let confusion = ConfusionMatrix::from_predictions(n_classes, &actual, &o.predicted);
        total.add(&confusion);
        all_idx.extend_from_slice(&o.test);
        all_scores.extend_from_slice(&o.positive_scores);
        fold_reports.push(FoldReport {
            fold: i,
            test_size: o.test.len(),
            metrics: Metrics::from_confusion(&confusion, auc(&o.test, &o.positive_scores)),
            confusion,
        });
    }
    let per_fold: Vec<Metrics> = fold_reports.iter().map(|f| f.metrics).collect();

    Ok(ModelReport {
        model: kind,
        task: data.task,
        variant: data.variant,
        classes: data
            .task
            .class_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        n: data.len(),
        width: data.width(),
        k: folds.k(),
        stratified: folds.stratified,
        seed,
        params: params.clone(),
        folds: fold_reports,
        mean: Metrics::mean(&per_fold),
        pooled: Metrics::from_confusion(&total, auc(&all_idx, &all_scores)),
        confusion: total,
    })
}

/// Plain-text table with one row per report: accuracy and F-measure for
/// binary tasks, precision and recall added for multi-class ones.
pub fn render_table(reports: &[ModelReport]) -> String {
    let multi = reports.iter().any(|r| !r.task.is_binary());
    let mut out = String::new();
    let _ = write!(
        out,
        "{:<20} {:<14} {:>6} {:>6}",
        "Classifier", "Data set", "A", "F"
    );
    if multi {
        let _ = write!(out, " {:>6} {:>6}", "P", "R");
    }
    let _ = writeln!(out, " {:>6}", "AUC");
    for r in reports {
        let m = &r.pooled;
        let _ = write!(
            out,
            "{:<20} {:<14} {:>6.3} {:>6.3}",
            r.model.display_name(),
            r.variant.as_str(),
            m.accuracy,
            m.f_measure
        );
        if multi {
            let _ = write!(out, " {:>6.3} {:>6.3}", m.precision, m.recall);
        }
        match m.roc_auc {
            Some(a) => {
                let _ = writeln!(out, " {a:>6.3}");
            }
            None => {
                let _ = writeln!(out, " {:>6}", "-");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> Dataset {
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        let rows = (0..n)
            .map(|i| vec![i as f64 + 100.0 * labels[i] as f64, ((i * 7) % 11) as f64])
            .collect();
        Dataset::new(
            rows,
            vec!["x".into(), "y".into()],
            vec![false, false],
            labels,
            Task::OrganicVsOrganized,
        )
        .unwrap()
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let params = ModelParams::default();
        let r = evaluate_cv(ModelKind::RandomForest, &separable(60), 10, 1, &params).unwrap();
        assert_eq!(r.pooled.accuracy, 1.0);
        assert_eq!(r.pooled.roc_auc, Some(1.0));
        assert_eq!(r.confusion.total(), 60);
        assert_eq!(r.folds.len(), 10);
    }

    #[test]
    fn report_is_reproducible() {
        let params = ModelParams::default();
        let d = separable(40);
        let a = evaluate_cv(ModelKind::LogisticRegression, &d, 5, 7, &params).unwrap();
        let b = evaluate_cv(ModelKind::LogisticRegression, &d, 5, 7, &params).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let table = render_table(&[a]);
        assert!(table.contains("Logistic Regression"));
    }
}
