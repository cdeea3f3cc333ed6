//! Model training, prediction, and the on-disk model container.
//!
//! Container layout (little endian):
//! `b"CKMODEL\0"`, `u32` format version, 32-byte trainset hash,
//! `u64` payload length, JSON payload.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::forest::{ForestParams, RandomForest};
use super::logreg::{LogRegParams, LogisticRegression};
use super::svm::{LinearSvm, SvmParams};
use super::{Dataset, ModelKind, TrainsetMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub forest: ForestParams,
    pub logreg: LogRegParams,
    pub svm: SvmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model")]
pub enum Model {
    #[serde(rename = "rf")]
    RandomForest(RandomForest),
    #[serde(rename = "logreg")]
    LogisticRegression(LogisticRegression),
    #[serde(rename = "svm")]
    LinearSvm(LinearSvm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

/// Trains `kind` on all of `data`.
pub fn train(kind: ModelKind, data: &Dataset, params: &ModelParams, seed: u64) -> Result<Model> {
    data.validate()?;
    let k = data.task.n_classes();
    if kind == ModelKind::LinearSvm && k != 2 {
        return Err(Error::Unsupported(format!(
            "linear SVM handles binary tasks only; `{}` has {k} classes",
            data.task
        )));
    }
    if data.width() == 0 {
        return Err(Error::Degenerate("dataset has no columns".into()));
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Degenerate(
            "training data holds a single class".into(),
        ));
    }
    Ok(match kind {
        ModelKind::RandomForest => Model::RandomForest(RandomForest::fit(
            &data.rows,
            &data.labels,
            k,
            &params.forest,
            seed,
        )),
        ModelKind::LogisticRegression => Model::LogisticRegression(LogisticRegression::fit(
            &data.rows,
            &data.labels,
            k,
            &params.logreg,
        )),
        ModelKind::LinearSvm => {
            Model::LinearSvm(LinearSvm::fit(&data.rows, &data.labels, &params.svm, seed))
        }
    })
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::RandomForest(_) => ModelKind::RandomForest,
            Model::LogisticRegression(_) => ModelKind::LogisticRegression,
            Model::LinearSvm(_) => ModelKind::LinearSvm,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::RandomForest(m) => m.n_features(),
            Model::LogisticRegression(m) => m.n_features(),
            Model::LinearSvm(m) => m.n_features(),
        }
    }

    /// Per-class scores and their argmax; ties go to the lower class id.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.n_features() {
            return Err(Error::WidthMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        let scores = match self {
            Model::RandomForest(m) => m.vote_fractions(row),
            Model::LogisticRegression(m) => m.probabilities(row),
            Model::LinearSvm(m) => m.scores(row),
        };
        Ok(Prediction {
            class: argmax(&scores),
            scores,
        })
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub const CONTAINER_MAGIC: &[u8; 8] = b"CKMODEL\0";
pub const CONTAINER_VERSION: u32 = 1;

/// A model bound to the training set recipe it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub trainset_hash: String,
    pub meta: TrainsetMeta,
    pub seed: u64,
    pub params: ModelParams,
    pub model: Model,
}

impl TrainedModel {
    /// Scores a row already in the training set's column space.
    pub fn predict_trainset_row(&self, trainset_hash: &str, row: &[f64]) -> Result<Prediction> {
        if trainset_hash != self.trainset_hash {
            return Err(mismatch(&self.trainset_hash, trainset_hash));
        }
        self.model.predict(row)
    }

    /// Scores a raw feature row built under `feature_schema_hash`.
    pub fn predict_feature_row(
        &self,
        feature_schema_hash: &str,
        row: &[f64],
    ) -> Result<Prediction> {
        if feature_schema_hash != self.meta.feature_schema_hash {
            return Err(mismatch(
                &self.meta.feature_schema_hash,
                feature_schema_hash,
            ));
        }
        self.model.predict(&self.meta.project(row)?)
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<()> {
        let hash = decode_hash(&self.trainset_hash)?;
        let payload = serde_json::to_vec(self)?;
        let io = |e| Error::io("<model>", e);
        w.write_all(CONTAINER_MAGIC).map_err(io)?;
        w.write_all(&CONTAINER_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&hash).map_err(io)?;
        w.write_all(&(payload.len() as u64).to_le_bytes())
            .map_err(io)?;
        w.write_all(&payload).map_err(io)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(mut r: R) -> Result<Self> {
        let io = |e| Error::io("<model>", e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Container("truncated header".into()))?;
        if &magic != CONTAINER_MAGIC {
            return Err(Error::Container("not a model file".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(io)?;
        let version = u32::from_le_bytes(word);
        if version != CONTAINER_VERSION {
            return Err(Error::Container(format!(
                "unsupported format version {version}"
            )));
        }
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash).map_err(io)?;
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(io)?;
        let len = u64::from_le_bytes(len);
        let mut payload = Vec::new();
        r.take(len).read_to_end(&mut payload).map_err(io)?;
        if payload.len() as u64 != len {
            return Err(Error::Container("truncated payload".into()));
        }
        let model: TrainedModel = serde_json::from_slice(&payload)?;
        if hex::encode(hash) != model.trainset_hash || model.meta.hash() != model.trainset_hash {
            return Err(Error::Container(
                "header hash disagrees with payload".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(f))
    }
}

fn mismatch(expected: &str, got: &str) -> Error {
    Error::SchemaMismatch(format!("model expects schema {expected}, input has {got}"))
}

fn decode_hash(hex_hash: &str) -> Result<[u8; 32]> {
    let bytes = hex::decode(hex_hash).map_err(|e| Error::Container(format!("bad hash: {e}")))?;
    bytes
        .try_into()
        .map_err(|_| Error::Container("hash is not 32 bytes".into()))
}
