//! Classification over feature rows: datasets, training-set variants,
//! classifiers, cross-validation, and feature ranking.

pub mod cv;
pub mod eval;
pub mod forest;
pub mod logreg;
pub mod metrics;
pub mod model;
pub mod pca;
pub mod rank;
pub mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::summarization::{FeatureSchema, FeatureTable};

pub use cv::{kfold_split, Folds};
pub use eval::{evaluate_cv, render_table, ModelReport};
pub use forest::ForestParams;
pub use metrics::{roc_auc, ConfusionMatrix, Metrics};
pub use model::{train, Model, ModelParams, Prediction, TrainedModel};
pub use pca::Pca;
pub use rank::{rank_features, subset_merit, FeatureRanking, RankParams};

/// Mixes `seed` and `idx` into an independent stream seed (splitmix64).
pub fn derive_seed(seed: u64, idx: u64) -> u64 {
    let mut z = seed ^ idx.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

macro_rules! cli_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

cli_enum!(
    /// Which label a dataset predicts.
    Task {
        OrganicVsOrganized => "organized",
        PoliticalVsNon => "political",
        Camp3Way => "camp",
    }
);

cli_enum!(ModelKind {
    RandomForest => "rf",
    LogisticRegression => "logreg",
    LinearSvm => "svm",
});

cli_enum!(
    /// Training-set variant: all columns or traced columns removed, each
    /// optionally projected onto principal components.
    Variant {
        All => "all",
        Pca => "pca",
        NoTraced => "no-traced",
        PcaNoTraced => "pca-no-traced",
    }
);

impl Task {
    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::OrganicVsOrganized => &["organic", "organized"],
            Task::PoliticalVsNon => &["nonpolitical", "political"],
            Task::Camp3Way => &["prohillary", "protrump", "none"],
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    pub fn is_binary(self) -> bool {
        self.n_classes() == 2
    }

    /// Class id of a collection's label for this task.
    pub fn label_of(self, labels: &LabelSet) -> Option<usize> {
        use crate::corpus::{Camp, Organization, Politicality};
        match self {
            Task::OrganicVsOrganized => labels.organization.map(|o| match o {
                Organization::Organic => 0,
                Organization::Organized => 1,
            }),
            Task::PoliticalVsNon => labels.politicality.map(|p| match p {
                Politicality::NonPolitical => 0,
                Politicality::Political => 1,
            }),
            Task::Camp3Way => labels.camp.map(|c| match c {
                Camp::ProHillary => 0,
                Camp::ProTrump => 1,
                Camp::Neither => 2,
            }),
        }
    }
}

impl ModelKind {
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "Random Forest",
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::LinearSvm => "Linear SVM",
        }
    }
}

impl Variant {
    pub fn uses_pca(self) -> bool {
        matches!(self, Variant::Pca | Variant::PcaNoTraced)
    }

    pub fn drops_traced(self) -> bool {
        matches!(self, Variant::NoTraced | Variant::PcaNoTraced)
    }
}

/// Per-column mean and population standard deviation. Constant columns keep
/// a scale of 1 so they map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut means = vec![0.0; d];
        let mut scales = vec![1.0; d];
        for j in 0..d {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            if var.sqrt() > 1e-12 * (1.0 + mean.abs()) {
                scales[j] = var.sqrt();
            }
        }
        Standardizer { means, scales }
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Labeled numeric samples for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub column_names: Vec<String>,
    /// Whether each column derives from traced-hashtag user features.
    pub traced: Vec<bool>,
    pub labels: Vec<usize>,
    pub task: Task,
    pub ids: Vec<String>,
    pub variant: Variant,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        column_names: Vec<String>,
        traced: Vec<bool>,
        labels: Vec<usize>,
        task: Task,
    ) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| format!("row{i}")).collect();
        let d = Dataset {
            rows,
            column_names,
            traced,
            labels,
            task,
            ids,
            variant: Variant::All,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.column_names.len();
        if self.traced.len() != w {
            return Err(Error::WidthMismatch {
                expected: w,
                got: self.traced.len(),
            });
        }
        if self.labels.len() != self.rows.len() || self.ids.len() != self.rows.len() {
            return Err(Error::InvalidArgument(
                "rows, labels and ids differ in length".into(),
            ));
        }
        for row in &self.rows {
            if row.len() != w {
                return Err(Error::WidthMismatch {
                    expected: w,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "dataset contains a non-finite value".into(),
                ));
            }
        }
        let k = self.task.n_classes();
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} is outside task `{}`",
                self.task
            )));
        }
        Ok(())
    }

    /// Builds a dataset from a feature table, keeping rows labeled for `task`.
    /// Columns must match `schema` exactly.
    pub fn from_table(table: &FeatureTable, schema: &FeatureSchema, task: Task) -> Result<Self> {
        let specs = schema.columns();
        if specs.len() != table.columns.len()
            || specs.iter().zip(&table.columns).any(|(s, c)| &s.name != c)
        {
            return Err(Error::SchemaMismatch(
                "feature table columns do not match the schema".into(),
            ));
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut ids = Vec::new();
        for ((row, label), id) in table
            .rows
            .iter()
            .zip(&table.labels)
            .zip(&table.collection_ids)
        {
            if let Some(y) = task.label_of(label) {
                rows.push(row.clone());
                labels.push(y);
                ids.push(id.clone());
            }
        }
        let skipped = table.rows.len() - rows.len();
        if skipped > 0 {
            log::warn!("{skipped} rows carry no `{task}` label and were left out");
        }
        let d = Dataset {
            rows,
            column_names: table.columns.clone(),
            traced: specs.iter().map(|s| s.traced).collect(),
            labels,
            task,
            ids,
            variant: Variant::All,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.task.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Dataset {
        Dataset {
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&j| r[j]).collect())
                .collect(),
            column_names: keep.iter().map(|&j| self.column_names[j].clone()).collect(),
            traced: keep.iter().map(|&j| self.traced[j]).collect(),
            labels: self.labels.clone(),
            task: self.task,
            ids: self.ids.clone(),
            variant: self.variant,
        }
    }

    pub fn subset_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            column_names: self.column_names.clone(),
            traced: self.traced.clone(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            task: self.task,
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            variant: self.variant,
        }
    }
}

/// Result of removing traced-hashtag columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Ablation {
    pub data: Dataset,
    /// Indices of the surviving columns in the input.
    pub kept: Vec<usize>,
    pub removed: usize,
}

/// Drops every traced-hashtag column. Applying it to already ablated data is a
/// no-op; data that never had tagged columns is rejected.
pub fn ablate_traced_features(data: &Dataset) -> Result<Ablation> {
    if data.variant.drops_traced() {
        return Ok(Ablation {
            data: data.clone(),
            kept: (0..data.width()).collect(),
            removed: 0,
        });
    }
    let kept: Vec<usize> = (0..data.width()).filter(|&j| !data.traced[j]).collect();
    let removed = data.width() - kept.len();
    if removed == 0 {
        return Err(Error::SchemaMismatch(
            "no columns are tagged as traced-hashtag features".into(),
        ));
    }
    let mut out = data.select_columns(&kept);
    out.variant = match data.variant {
        Variant::Pca => Variant::PcaNoTraced,
        _ => Variant::NoTraced,
    };
    Ok(Ablation {
        data: out,
        kept,
        removed,
    })
}

/// Standardizes, drops constant columns, and projects onto the leading
/// principal components covering `variance_kept` of the variance.
pub fn pca_fit_transform(data: &Dataset, variance_kept: f64) -> Result<(Dataset, Pca)> {
    if data.variant.uses_pca() {
        return Err(Error::InvalidArgument(
            "dataset is already projected".into(),
        ));
    }
    let pca = Pca::fit(&data.rows, variance_kept)?;
    let rows = data
        .rows
        .iter()
        .map(|r| pca.transform(r))
        .collect::<Result<Vec<_>>>()?;
    let k = pca.n_components();
    let out = Dataset {
        rows,
        column_names: (1..=k).map(|i| format!("pc{i}")).collect(),
        traced: vec![false; k],
        labels: data.labels.clone(),
        task: data.task,
        ids: data.ids.clone(),
        variant: if data.variant.drops_traced() {
            Variant::PcaNoTraced
        } else {
            Variant::Pca
        },
    };
    Ok((out, pca))
}

pub const DEFAULT_VARIANCE_KEPT: f64 = 0.95;

/// How a training set was derived from feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainsetMeta {
    pub feature_schema_hash: String,
    pub task: Task,
    pub variant: Variant,
    pub variance_kept: f64,
    /// Feature columns the set was built from.
    pub source_columns: Vec<String>,
    /// Source columns surviving ablation.
    pub kept_columns: Vec<usize>,
    pub pca: Option<Pca>,
    /// Columns of the resulting dataset.
    pub columns: Vec<String>,
}

impl TrainsetMeta {
    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("metadata serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Maps a source feature row into the training set's column space.
    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.source_columns.len() {
            return Err(Error::WidthMismatch {
                expected: self.source_columns.len(),
                got: row.len(),
            });
        }
        let kept: Vec<f64> = self.kept_columns.iter().map(|&j| row[j]).collect();
        match &self.pca {
            Some(p) => p.transform(&kept),
            None => Ok(kept),
        }
    }
}

/// A dataset together with the recipe that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trainset {
    pub hash: String,
    pub meta: TrainsetMeta,
    pub data: Dataset,
}

impl Trainset {
    pub fn build(
        base: &Dataset,
        feature_schema_hash: &str,
        variant: Variant,
        variance_kept: f64,
    ) -> Result<Self> {
        if base.variant != Variant::All {
            return Err(Error::InvalidArgument(
                "trainsets are built from unmodified feature rows".into(),
            ));
        }
        let (data, kept) = if variant.drops_traced() {
            let a = ablate_traced_features(base)?;
            (a.data, a.kept)
        } else {
            (base.clone(), (0..base.width()).collect())
        };
        let (data, pca) = if variant.uses_pca() {
            let (d, p) = pca_fit_transform(&data, variance_kept)?;
            (d, Some(p))
        } else {
            (data, None)
        };
        let meta = TrainsetMeta {
            feature_schema_hash: feature_schema_hash.to_owned(),
            task: base.task,
            variant,
            variance_kept,
            source_columns: base.column_names.clone(),
            kept_columns: kept,
            pca,
            columns: data.column_names.clone(),
        };
        Ok(Trainset {
            hash: meta.hash(),
            meta,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t: Trainset = serde_json::from_str(&raw)?;
        if t.meta.hash() != t.hash {
            return Err(Error::SchemaMismatch(format!(
                "{} has a stale hash; rebuild it",
                path.display()
            )));
        }
        t.data.validate()?;
        Ok(t)
    }
}
