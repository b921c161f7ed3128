use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::DEFAULT_SPACING;
use crate::optimizer::{CostWeights, OptimizerConfig, TrackTargets};
use crate::segmentation::SegmentationConfig;

use super::IoError;

/// Everything a generation run needs besides the planar centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub targets: TrackTargets,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    #[serde(default = "default_spacing")]
    pub resample_spacing: f64,
    #[serde(default)]
    pub segment_count: Option<usize>,
    /// Optimize the planar scale factor alongside the heights.
    #[serde(default)]
    pub scaled: bool,
    #[serde(default = "default_scale")]
    pub f_init: f64,
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

fn default_scale() -> f64 {
    1.0
}

impl SpecFile {
    pub fn new(targets: TrackTargets) -> Self {
        Self {
            targets,
            weights: CostWeights::default(),
            optimizer: OptimizerConfig::default(),
            segmentation: SegmentationConfig::default(),
            resample_spacing: DEFAULT_SPACING,
            segment_count: None,
            scaled: false,
            f_init: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        self.targets
            .validate()
            .map_err(|e| IoError::invalid("targets", e))?;
        self.weights
            .validate()
            .map_err(|e| IoError::invalid("weights", e))?;
        self.optimizer
            .validate()
            .map_err(|e| IoError::invalid("optimizer", e))?;
        self.segmentation
            .validate()
            .map_err(|e| IoError::invalid("segmentation", e))?;
        if !(self.resample_spacing.is_finite() && self.resample_spacing > 0.0) {
            return Err(IoError::invalid("resample_spacing", "must be > 0"));
        }
        if self.segment_count == Some(0) {
            return Err(IoError::invalid("segment_count", "must be >= 1"));
        }
        if !(self.f_init.is_finite() && self.f_init > 0.0) {
            return Err(IoError::invalid("f_init", "must be > 0"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<SpecFile, IoError> {
    let spec: SpecFile = IoError::from_json(text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn read_spec(path: &Path) -> Result<SpecFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_spec(&text)
}
