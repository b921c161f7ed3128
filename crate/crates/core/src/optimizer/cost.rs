//! The elevation-assignment objective and an incremental evaluator for it.

use serde::{Deserialize, Serialize};

use super::{CostWeights, OptimizerError, TrackTargets};
use crate::geometry::{
    curvature_3d, differences_at, space_curvature, total_length_3d, CurvatureProfile,
    PlanarDerivatives, Polyline2D, Polyline3D,
};
use crate::segmentation::SegmentPartition;

/// Weighted residual terms of the objective and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub length_term: f64,
    pub height_term: f64,
    pub curvature_term: f64,
    pub slope_term: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(length_term: f64, height_term: f64, curvature_term: f64, slope_term: f64) -> Self {
        Self {
            length_term,
            height_term,
            curvature_term,
            slope_term,
            total: length_term + height_term + curvature_term + slope_term,
        }
    }
}

/// Per-segment slopes of a spatial centerline: net drop over each segment's
/// owned steps divided by the planar length of those steps.
pub fn segment_slopes(line: &Polyline3D, part: &SegmentPartition) -> Vec<f64> {
    let pts = line.points();
    (0..part.len())
        .map(|m| {
            let steps = part.step_range(m);
            let planar: f64 = steps
                .clone()
                .map(|k| crate::geometry::planar_step(pts[k - 1].xy(), pts[k].xy()))
                .sum();
            (pts[steps.start - 1].z - pts[steps.end - 1].z) / planar
        })
        .collect()
}

/// Evaluates
/// `a·|L − Σd_k| + b·|H − Σ|Δz|| + (c/n)·Σ|K_p − K_s| + d·|mean(g) − ḡ|`
/// on a spatial centerline.
pub fn cost(
    line3d: &Polyline3D,
    part: &SegmentPartition,
    planar_curvature: &CurvatureProfile,
    targets: &TrackTargets,
    weights: &CostWeights,
) -> Result<CostBreakdown, OptimizerError> {
    let n = line3d.len();
    if planar_curvature.len() != n || part.n_points() != n {
        return Err(OptimizerError::LengthMismatch {
            expected: n,
            got: planar_curvature.len().min(part.n_points()),
        });
    }
    let spatial = curvature_3d(line3d)?;
    let length = total_length_3d(line3d);
    let variation: f64 = line3d
        .points()
        .windows(2)
        .map(|w| (w[1].z - w[0].z).abs())
        .sum();
    let curvature_gap: f64 = planar_curvature
        .values()
        .iter()
        .zip(spatial.values())
        .map(|(p, s)| (p - s).abs())
        .sum();
    let slopes = segment_slopes(line3d, part);
    let mean_slope = slopes.iter().sum::<f64>() / slopes.len() as f64;

    Ok(CostBreakdown::new(
        weights.a * (targets.total_length - length).abs(),
        weights.b * (targets.height_difference - variation).abs(),
        weights.c / n as f64 * curvature_gap,
        weights.d * (mean_slope - targets.average_slope).abs(),
    ))
}

/// Incremental evaluator of [`cost`] for heights on a fixed planar line.
///
/// Elevation steps are `Δz_k = −d_k·g_m` for the segment owning step `k`.
/// Changing one segment's height only touches that segment's steps and the
/// curvature stencils that reach them, so single-coordinate moves cost
/// O(points in the segment).
pub(crate) struct CostModel<'a> {
    targets: &'a TrackTargets,
    weights: &'a CostWeights,
    part: SegmentPartition,
    steps: Vec<f64>,
    derivs: PlanarDerivatives,
    planar_curvature: Vec<f64>,
    heights: Vec<f64>,
    dz: Vec<f64>,
    seg_length: Vec<f64>,
    seg_variation: Vec<f64>,
    curvature_gap: Vec<f64>,
}

impl<'a> CostModel<'a> {
    /// `part` must be measured on `line`.
    pub fn new(
        line: &Polyline2D,
        part: SegmentPartition,
        planar_curvature: Vec<f64>,
        targets: &'a TrackTargets,
        weights: &'a CostWeights,
    ) -> Self {
        let n = line.len();
        let j = part.len();
        Self {
            targets,
            weights,
            steps: line.steps(),
            derivs: PlanarDerivatives::of(line),
            planar_curvature,
            heights: vec![0.0; j],
            dz: vec![0.0; n],
            seg_length: vec![0.0; j],
            seg_variation: vec![0.0; j],
            curvature_gap: vec![0.0; n],
            part,
        }
    }

    pub fn partition(&self) -> &SegmentPartition {
        &self.part
    }

    /// Sets every height and re-evaluates from scratch.
    pub fn set_heights(&mut self, heights: &[f64]) -> Result<f64, OptimizerError> {
        if heights.len() != self.part.len() {
            return Err(OptimizerError::LengthMismatch {
                expected: self.part.len(),
                got: heights.len(),
            });
        }
        for (m, &h) in heights.iter().enumerate() {
            self.write_segment(m, h);
        }
        for p in 0..self.steps.len() {
            self.curvature_gap[p] = self.point_gap(p)?;
        }
        Ok(self.total())
    }

    /// Moves one segment's height and returns the new total.
    pub fn set_height(&mut self, m: usize, height: f64) -> Result<f64, OptimizerError> {
        self.write_segment(m, height);
        let n = self.steps.len();
        let steps = self.part.step_range(m);
        let lo = steps.start - 1;
        let hi = steps.end - 1;
        for p in lo..=hi {
            self.curvature_gap[p] = self.point_gap(p)?;
        }
        // one-sided boundary stencils reach three steps inward
        if lo > 0 {
            self.curvature_gap[0] = self.point_gap(0)?;
        }
        if hi < n - 1 {
            self.curvature_gap[n - 1] = self.point_gap(n - 1)?;
        }
        Ok(self.total())
    }

    fn write_segment(&mut self, m: usize, height: f64) {
        self.heights[m] = height;
        let slope = height / self.part.planar_lengths()[m];
        let (mut length, mut variation) = (0.0, 0.0);
        for k in self.part.step_range(m) {
            let dz = -self.steps[k] * slope;
            self.dz[k] = dz;
            length += (self.steps[k] * self.steps[k] + dz * dz).sqrt();
            variation += dz.abs();
        }
        self.seg_length[m] = length;
        self.seg_variation[m] = variation;
    }

    /// |K_p − K_s| at point `p`, with the elevation stencil rebuilt from steps.
    fn point_gap(&self, p: usize) -> Result<f64, OptimizerError> {
        let n = self.steps.len();
        let (lo, hi) = if p == 0 {
            (0, 3.min(n - 1))
        } else if p == n - 1 {
            (n.saturating_sub(4), n - 1)
        } else {
            (p - 1, p + 1)
        };
        let mut window = [0.0; 4];
        for i in 1..=hi - lo {
            window[i] = window[i - 1] + self.dz[lo + i];
        }
        let (zd, zdd) = differences_at(&window[..=hi - lo], p - lo, 1.0);
        let d = &self.derivs;
        let u = [d.xd[p], d.yd[p], zd];
        if u[0] * u[0] + u[1] * u[1] + u[2] * u[2] < crate::geometry::DEGENERATE_SPEED_SQ {
            return Err(crate::geometry::GeometryError::Degenerate(p).into());
        }
        let spatial = space_curvature(u, [d.xdd[p], d.ydd[p], zdd]);
        Ok((self.planar_curvature[p] - spatial).abs())
    }

    pub fn breakdown(&self) -> CostBreakdown {
        let n = self.steps.len() as f64;
        let j = self.part.len() as f64;
        let length: f64 = self.seg_length.iter().sum();
        let variation: f64 = self.seg_variation.iter().sum();
        let gap: f64 = self.curvature_gap.iter().sum();
        let mean_slope = self
            .heights
            .iter()
            .zip(self.part.planar_lengths())
            .map(|(h, d)| h / d)
            .sum::<f64>()
            / j;
        let (t, w) = (self.targets, self.weights);
        CostBreakdown::new(
            w.a * (t.total_length - length).abs(),
            w.b * (t.height_difference - variation).abs(),
            w.c / n * gap,
            w.d * (mean_slope - t.average_slope).abs(),
        )
    }

    pub fn total(&self) -> f64 {
        self.breakdown().total
    }
}
