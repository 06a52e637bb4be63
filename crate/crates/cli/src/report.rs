//! The JSON report written next to the artifacts of a run.
//!
//! Paths inside the report are relative to the report's own directory, so a
//! run directory can be moved and still re-rendered.

use std::path::Path;

use corrgap::estimators::Convergence;
use corrgap::render::DiffDomain;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    /// Missing rates, or block fractions for the block pattern.
    pub levels: Vec<f64>,
    pub ground_truth: String,
    pub masks: Vec<MaskInfo>,
    /// In config order.
    pub methods: Vec<MethodReport>,
    /// Figure columns after the ground truth, RMSE at the highest level descending.
    pub column_order: Vec<String>,
    pub diff_domain: DiffDomain,
    pub figures: Vec<FigureInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskInfo {
    pub level: f64,
    pub seed: u64,
    pub missing_cells: usize,
    pub missing_rate: f64,
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Ok,
    Failed,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub name: String,
    /// False when the method failed at some level; its panels are then omitted.
    pub in_figures: bool,
    pub rank_at_max_rate: Option<usize>,
    pub per_rate: Vec<RateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rate: f64,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub rmse: Option<f64>,
    /// Cells entering the RMSE: those defined in both matrices.
    pub valid_cells: Option<usize>,
    /// Dense rank among the plotted methods at this level (1 = lowest RMSE).
    pub rank: Option<usize>,
    pub sublabel: Option<String>,
    pub wall_time_seconds: f64,
    pub convergence: Option<Convergence>,
    pub correlation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureInfo {
    pub path: String,
    /// Upper end of the colour domain of difference figures.
    pub diff_vmax: Option<f64>,
}

impl ExperimentReport {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::io("serializing report", e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.name == name)
    }
}
