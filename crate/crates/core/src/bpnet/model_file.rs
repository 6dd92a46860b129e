//! JSON persistence for trained networks.
//!
//! Floats are written in shortest round-trip form, so a write/read cycle
//! reproduces every weight exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{NetworkConfig, NetworkWeights, Standardizer, StopReason, TrainedModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySummary {
    pub epochs: usize,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub stop_reason: StopReason,
    pub mac_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardizers {
    pub input: Standardizer,
    pub output: Standardizer,
}

/// Weights as nested row-major arrays: `v[i][j]`, `w[j][q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightArrays {
    pub v: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: NetworkConfig,
    pub standardizers: Standardizers,
    pub weights: WeightArrays,
    pub history: HistorySummary,
}

impl From<&TrainedModel> for ModelFile {
    fn from(model: &TrainedModel) -> Self {
        let wt = &model.weights;
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: model.config.clone(),
            standardizers: Standardizers {
                input: model.input_scaler,
                output: model.output_scaler,
            },
            weights: WeightArrays {
                v: wt.v.chunks(wt.hidden).map(<[f64]>::to_vec).collect(),
                b: wt.b.clone(),
                w: wt.w.chunks(wt.n_out).map(<[f64]>::to_vec).collect(),
                beta: wt.beta.clone(),
            },
            history: model.summary,
        }
    }
}

impl TryFrom<ModelFile> for TrainedModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion(file.format_version));
        }
        file.config.validate()?;
        file.standardizers.input.validate()?;
        file.standardizers.output.validate()?;
        let (n, m, k) = (file.config.n_in, file.config.hidden, file.config.n_out);
        let rows_ok = |rows: &[Vec<f64>], count: usize, width: usize| {
            rows.len() == count && rows.iter().all(|r| r.len() == width)
        };
        let arrays = file.weights;
        if !rows_ok(&arrays.v, n, m) {
            return Err(Error::invalid("weights.v", format!("expected {n}×{m} array")));
        }
        if !rows_ok(&arrays.w, m, k) {
            return Err(Error::invalid("weights.w", format!("expected {m}×{k} array")));
        }
        if arrays.b.len() != m {
            return Err(Error::invalid("weights.b", format!("expected {m} entries")));
        }
        if arrays.beta.len() != k {
            return Err(Error::invalid("weights.beta", format!("expected {k} entries")));
        }
        let weights = NetworkWeights {
            n_in: n,
            hidden: m,
            n_out: k,
            v: arrays.v.concat(),
            b: arrays.b,
            w: arrays.w.concat(),
            beta: arrays.beta,
        };
        if !weights.is_finite() {
            return Err(Error::invalid("weights", "non-finite entry"));
        }
        Ok(TrainedModel {
            config: file.config,
            input_scaler: file.standardizers.input,
            output_scaler: file.standardizers.output,
            weights,
            summary: file.history,
        })
    }
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
