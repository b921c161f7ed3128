//! Geometric measurements of generated centerlines and comparison against
//! reference tracks.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    curvature_3d, spatial_step, total_length_3d, CurvatureProfile, GeometryError, Polyline3D,
};
use crate::optimizer::{segment_slopes, TrackTargets};
use crate::segmentation::SegmentPartition;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("reference {0} must be non-zero")]
    ZeroReference(&'static str),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub total_length: f64,
    /// Net drop `z_first − z_last`.
    pub height_difference: f64,
    /// Total vertical variation `Σ|Δz|`.
    pub height_variation: f64,
    pub max_slope: f64,
    /// Unweighted mean of the per-segment slopes.
    pub average_slope: f64,
    /// Net drop over total length.
    pub height_over_length: f64,
    pub slope_within_limits: bool,
    pub per_segment_slopes: Vec<f64>,
}

impl GeometryReport {
    pub fn key_measures(&self) -> KeyMeasures {
        KeyMeasures {
            total_length: self.total_length,
            height_difference: self.height_difference,
            average_slope: self.average_slope,
        }
    }
}

/// The three quantities tracks are compared on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyMeasures {
    pub total_length: f64,
    pub height_difference: f64,
    pub average_slope: f64,
}

impl KeyMeasures {
    pub const fn new(total_length: f64, height_difference: f64, average_slope: f64) -> Self {
        Self {
            total_length,
            height_difference,
            average_slope,
        }
    }
}

impl From<&GeometryReport> for KeyMeasures {
    fn from(report: &GeometryReport) -> Self {
        report.key_measures()
    }
}

impl From<&TrackTargets> for KeyMeasures {
    fn from(t: &TrackTargets) -> Self {
        Self::new(t.total_length, t.height_difference, t.average_slope)
    }
}

/// Relative errors `|generated − reference| / reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub length_error: f64,
    pub height_error: f64,
    pub slope_error: f64,
}

impl ComparisonReport {
    /// Componentwise maximum.
    pub fn max(self, other: Self) -> Self {
        Self {
            length_error: self.length_error.max(other.length_error),
            height_error: self.height_error.max(other.height_error),
            slope_error: self.slope_error.max(other.slope_error),
        }
    }

    pub fn within(&self, length: f64, height: f64, slope: f64) -> bool {
        self.length_error <= length && self.height_error <= height && self.slope_error <= slope
    }
}

pub fn geometry_report(
    line3d: &Polyline3D,
    part: &SegmentPartition,
    targets: &TrackTargets,
) -> Result<GeometryReport, ReportError> {
    if part.n_points() != line3d.len() {
        return Err(ReportError::LengthMismatch {
            expected: line3d.len(),
            got: part.n_points(),
        });
    }
    let pts = line3d.points();
    let total_length = total_length_3d(line3d);
    let height_difference = pts[0].z - pts[pts.len() - 1].z;
    let height_variation = pts.windows(2).map(|w| (w[1].z - w[0].z).abs()).sum();
    let slopes = segment_slopes(line3d, part);
    let average_slope = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let max_slope = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // bounds are checked with a little slack for the rounding in z
    let tol = 1e-9;
    let slope_within_limits = slopes
        .iter()
        .all(|g| *g >= targets.slope_min - tol && *g <= targets.slope_max + tol);
    Ok(GeometryReport {
        total_length,
        height_difference,
        height_variation,
        max_slope,
        average_slope,
        height_over_length: height_difference / total_length,
        slope_within_limits,
        per_segment_slopes: slopes,
    })
}

pub fn compare_reports(
    generated: &KeyMeasures,
    reference: &KeyMeasures,
) -> Result<ComparisonReport, ReportError> {
    let rel = |g: f64, r: f64, name: &'static str| {
        if r == 0.0 {
            Err(ReportError::ZeroReference(name))
        } else {
            Ok(((g - r) / r).abs())
        }
    };
    Ok(ComparisonReport {
        length_error: rel(
            generated.total_length,
            reference.total_length,
            "total_length",
        )?,
        height_error: rel(
            generated.height_difference,
            reference.height_difference,
            "height_difference",
        )?,
        slope_error: rel(
            generated.average_slope,
            reference.average_slope,
            "average_slope",
        )?,
    })
}

/// Generated tracks laid out against a reference with their relative errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub reference_label: String,
    pub reference: KeyMeasures,
    pub rows: Vec<(String, KeyMeasures, ComparisonReport)>,
}

impl ComparisonTable {
    pub fn new(reference_label: impl Into<String>, reference: KeyMeasures) -> Self {
        Self {
            reference_label: reference_label.into(),
            reference,
            rows: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        label: impl Into<String>,
        generated: KeyMeasures,
    ) -> Result<(), ReportError> {
        let cmp = compare_reports(&generated, &self.reference)?;
        self.rows.push((label.into(), generated, cmp));
        Ok(())
    }

    /// Largest relative error per quantity over all rows.
    pub fn max_errors(&self) -> Option<ComparisonReport> {
        self.rows.iter().map(|r| r.2).reduce(ComparisonReport::max)
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.0.len())
            .chain([self.reference_label.len(), 5])
            .max()
            .unwrap_or(0);
        writeln!(
            f,
            "{:<width$} | {:>16} | {:>21} | {:>13} | {:>8} | {:>8} | {:>8}",
            "",
            "Total Length (m)",
            "Height Difference (m)",
            "Average Slope",
            "L err %",
            "H err %",
            "g err %"
        )?;
        for (label, m, cmp) in &self.rows {
            writeln!(
                f,
                "{label:<width$} | {:>16.1} | {:>21.1} | {:>13.4} | {:>8.2} | {:>8.2} | {:>8.2}",
                m.total_length,
                m.height_difference,
                m.average_slope,
                100.0 * cmp.length_error,
                100.0 * cmp.height_error,
                100.0 * cmp.slope_error
            )?;
        }
        let r = &self.reference;
        writeln!(
            f,
            "{:<width$} | {:>16.1} | {:>21.1} | {:>13.4} | {:>8} | {:>8} | {:>8}",
            self.reference_label, r.total_length, r.height_difference, r.average_slope, "", "", ""
        )?;
        if let Some(max) = self.max_errors() {
            write!(
                f,
                "{:<width$} | {:>16} | {:>21} | {:>13} | {:>8.2} | {:>8.2} | {:>8.2}",
                "max",
                "",
                "",
                "",
                100.0 * max.length_error,
                100.0 * max.height_error,
                100.0 * max.slope_error
            )?;
        }
        Ok(())
    }
}

/// Plot-ready series aligned on the cumulative 3D arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesBundle {
    pub arc_length: Vec<f64>,
    pub height: Vec<f64>,
    /// Slope of the segment owning each point.
    pub slope: Vec<f64>,
    pub planar_curvature: Vec<f64>,
    pub spatial_curvature: Vec<f64>,
}

impl SeriesBundle {
    pub fn len(&self) -> usize {
        self.arc_length.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arc_length.is_empty()
    }
}

pub fn export_series(
    line3d: &Polyline3D,
    part: &SegmentPartition,
    k2d: &CurvatureProfile,
) -> Result<SeriesBundle, ReportError> {
    let n = line3d.len();
    if part.n_points() != n || k2d.len() != n {
        return Err(ReportError::LengthMismatch {
            expected: n,
            got: part.n_points().min(k2d.len()),
        });
    }
    let pts = line3d.points();
    let mut arc_length = Vec::with_capacity(n);
    let mut s = 0.0;
    arc_length.push(s);
    for w in pts.windows(2) {
        s += spatial_step(w[0], w[1]);
        arc_length.push(s);
    }
    let seg_slopes = segment_slopes(line3d, part);
    Ok(SeriesBundle {
        arc_length,
        height: line3d.z(),
        slope: part
            .point_segments()
            .iter()
            .map(|&m| seg_slopes[m])
            .collect(),
        planar_curvature: k2d.values().to_vec(),
        spatial_curvature: curvature_3d(line3d)?.values().to_vec(),
    })
}
