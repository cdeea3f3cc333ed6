//! Resolved run configuration: defaults, then a config file, then flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::default_cutoff;
use crate::error::{Error, Result};
use crate::learn::{ModelKind, ModelParams, RankParams, Task, Variant, DEFAULT_VARIANCE_KEPT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub organized: usize,
    pub organic: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            organized: 100,
            organic: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Vec<PathBuf>,
    pub hashtags: Vec<String>,
    pub labels: Option<PathBuf>,
    pub window_days: u32,
    pub interval_mins: u32,
    /// Bucket-schema override.
    pub schema: Option<PathBuf>,
    pub cutoff: NaiveDate,
    /// Reference date for account ages; the latest corpus timestamp if unset.
    pub today: Option<NaiveDate>,
    pub seed: u64,
    pub task: Task,
    pub variant: Variant,
    pub model: ModelKind,
    pub folds: usize,
    pub variance_kept: f64,
    pub out: PathBuf,
    pub params: ModelParams,
    pub rank: RankParams,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: Vec::new(),
            hashtags: Vec::new(),
            labels: None,
            window_days: 7,
            interval_mins: 60,
            schema: None,
            cutoff: default_cutoff(),
            today: None,
            seed: 42,
            task: Task::OrganicVsOrganized,
            variant: Variant::All,
            model: ModelKind::RandomForest,
            folds: 10,
            variance_kept: DEFAULT_VARIANCE_KEPT,
            out: PathBuf::from("out"),
            params: ModelParams::default(),
            rank: RankParams::default(),
            synth: SynthConfig::default(),
        }
    }
}

/// What `run_config.json` holds: the command and its resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config: PipelineConfig,
}

impl PipelineConfig {
    /// Reads a TOML file, a JSON file, or a `run_config.json` record.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            let value: serde_json::Value = serde_json::from_str(&raw)?;
            let inner = match value.get("config") {
                Some(c) if value.get("command").is_some() => c.clone(),
                _ => value,
            };
            return Ok(serde_json::from_value(inner)?);
        }
        toml::from_str(&raw).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.window_days == 0 {
            return bad("window_days must be positive".into());
        }
        if self.interval_mins == 0 {
            return bad("interval_mins must be positive".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.variance_kept > 0.0 && self.variance_kept <= 1.0) {
            return bad(format!(
                "variance_kept must be in (0, 1], got {}",
                self.variance_kept
            ));
        }
        if self.params.forest.n_trees == 0 {
            return bad("forest needs at least one tree".into());
        }
        Ok(())
    }
}
