use std::path::Path;

use serde::{Deserialize, Serialize};

use super::calibrate::CalibrationResult;
use super::config::TrainConfig;
use crate::error::Result;
use crate::nets::ScorerKind;

pub const RUN_MANIFEST_VERSION: u32 = 1;

/// Summary of one training run, written next to the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub scorer: ScorerKind,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub final_losses: Vec<f64>,
    pub calibration: Option<CalibrationResult>,
    #[serde(default)]
    pub early_stop_epochs: Vec<usize>,
    #[serde(default)]
    pub d_real: Vec<f64>,
    #[serde(default)]
    pub d_fake: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub train_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
