//! Straight/curved classification and contiguous segment partitions.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CurvatureProfile, Polyline2D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("curvature threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("smoothing window must be odd and at least 3, got {0}")]
    InvalidWindow(usize),
    #[error("{labels} labels for {points} points")]
    LengthMismatch { labels: usize, points: usize },
    #[error("segment starting at point {0} contains a single point")]
    SinglePointSegment(usize),
    #[error("segment count {requested} outside 1..={max}")]
    CountOutOfRange { requested: usize, max: usize },
    #[error("no segment has enough points to split further")]
    CannotSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Straight,
    Curved,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Straight => "straight",
            SegmentKind::Curved => "curved",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub curvature_threshold: f64,
    pub smoothing_window: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            curvature_threshold: 0.005,
            smoothing_window: 5,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        if !(self.curvature_threshold.is_finite() && self.curvature_threshold > 0.0) {
            return Err(SegmentationError::InvalidThreshold(
                self.curvature_threshold,
            ));
        }
        if self.smoothing_window < 3 || self.smoothing_window.is_multiple_of(2) {
            return Err(SegmentationError::InvalidWindow(self.smoothing_window));
        }
        Ok(())
    }
}

/// Contiguous segments covering every point of a polyline exactly once.
///
/// A boundary point belongs to the later segment, so segment `m > 0` also owns
/// the step that enters its first point. Planar lengths therefore sum to the
/// polyline's total planar length.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPartition {
    starts: Vec<usize>,
    n_points: usize,
    kinds: Vec<SegmentKind>,
    planar_lengths: Vec<f64>,
}

impl SegmentPartition {
    fn from_starts(
        starts: Vec<usize>,
        kinds: Vec<SegmentKind>,
        steps: &[f64],
    ) -> Result<Self, SegmentationError> {
        let n_points = steps.len();
        let mut part = Self {
            starts,
            n_points,
            kinds,
            planar_lengths: Vec::new(),
        };
        for m in 0..part.len() {
            if part.range(m).len() < 2 {
                return Err(SegmentationError::SinglePointSegment(part.starts[m]));
            }
        }
        part.planar_lengths = (0..part.len())
            .map(|m| part.step_range(m).map(|k| steps[k]).sum())
            .collect();
        Ok(part)
    }

    /// Single segment spanning the whole line.
    pub fn whole(line: &Polyline2D, kind: SegmentKind) -> Self {
        Self::from_starts(vec![0], vec![kind], &line.steps())
            .expect("polylines have at least three points")
    }

    /// Builds a partition from segment start indices; the first start must be 0.
    pub fn from_boundaries(
        line: &Polyline2D,
        starts: &[usize],
        kinds: &[SegmentKind],
    ) -> Result<Self, SegmentationError> {
        if starts.len() != kinds.len() || starts.first() != Some(&0) {
            return Err(SegmentationError::LengthMismatch {
                labels: kinds.len(),
                points: starts.len(),
            });
        }
        if starts.windows(2).any(|w| w[1] <= w[0]) || starts.last() >= Some(&line.len()) {
            return Err(SegmentationError::LengthMismatch {
                labels: starts.len(),
                points: line.len(),
            });
        }
        Self::from_starts(starts.to_vec(), kinds.to_vec(), &line.steps())
    }

    /// Number of segments.
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.starts
    }

    pub fn kinds(&self) -> &[SegmentKind] {
        &self.kinds
    }

    pub fn planar_lengths(&self) -> &[f64] {
        &self.planar_lengths
    }

    pub fn point_counts(&self) -> Vec<usize> {
        (0..self.len()).map(|m| self.range(m).len()).collect()
    }

    /// Point indices of segment `m`.
    pub fn range(&self, m: usize) -> Range<usize> {
        let end = self.starts.get(m + 1).copied().unwrap_or(self.n_points);
        self.starts[m]..end
    }

    /// Indices of the steps owned by segment `m` (step `k` enters point `k`).
    pub fn step_range(&self, m: usize) -> Range<usize> {
        let r = self.range(m);
        r.start.max(1)..r.end
    }

    /// Segment index for every point.
    pub fn point_segments(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_points);
        for m in 0..self.len() {
            out.extend(std::iter::repeat_n(m, self.range(m).len()));
        }
        out
    }

    /// The same boundaries with planar lengths measured on another polyline
    /// with the same point count (for example a scaled copy).
    pub fn remeasured(&self, line: &Polyline2D) -> Self {
        assert_eq!(line.len(), self.n_points, "point count must match");
        Self::from_starts(self.starts.clone(), self.kinds.clone(), &line.steps())
            .expect("boundaries already validated")
    }
}

/// Raw label per point: straight iff curvature is below the threshold.
pub fn classify_points(
    profile: &CurvatureProfile,
    config: &SegmentationConfig,
) -> Vec<SegmentKind> {
    profile
        .values()
        .iter()
        .map(|&k| {
            if k < config.curvature_threshold {
                SegmentKind::Straight
            } else {
                SegmentKind::Curved
            }
        })
        .collect()
}

/// Neighborhood smoothing of point labels.
///
/// A point is straight iff its own curvature is below the threshold and at
/// least half of its neighbors within the window (excluding itself, truncated
/// at the ends) are straight. Sweeps run in place until no label changes, so
/// the output is a fixed point of the rule.
pub fn smooth_labels(
    labels: &[SegmentKind],
    profile: &CurvatureProfile,
    config: &SegmentationConfig,
) -> Vec<SegmentKind> {
    let n = labels.len();
    debug_assert_eq!(n, profile.len());
    let half = config.smoothing_window / 2;
    let mut out = labels.to_vec();
    // Sequential majority updates settle; the cap is a backstop.
    for _ in 0..=n {
        let mut changed = false;
        for k in 0..n {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(n - 1);
            let neighbors = hi - lo;
            let straight = (lo..=hi)
                .filter(|&i| i != k && out[i] == SegmentKind::Straight)
                .count();
            let label =
                if profile.values()[k] < config.curvature_threshold && 2 * straight >= neighbors {
                    SegmentKind::Straight
                } else {
                    SegmentKind::Curved
                };
            if label != out[k] {
                out[k] = label;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    out
}

/// Maximal runs of equal labels become segments.
pub fn build_partition(
    labels: &[SegmentKind],
    line: &Polyline2D,
) -> Result<SegmentPartition, SegmentationError> {
    if labels.len() != line.len() {
        return Err(SegmentationError::LengthMismatch {
            labels: labels.len(),
            points: line.len(),
        });
    }
    let mut starts = vec![0];
    let mut kinds = vec![labels[0]];
    for k in 1..labels.len() {
        if labels[k] != labels[k - 1] {
            starts.push(k);
            kinds.push(labels[k]);
        }
    }
    SegmentPartition::from_starts(starts, kinds, &line.steps())
}

/// Splits or merges segments until exactly `count` remain.
///
/// Splitting takes the longest splittable segment and cuts it at its
/// arc-length midpoint; children keep the parent's kind. Merging folds the
/// shortest segment into its shorter neighbor; the result is curved if either
/// side was. Ties go to the lower index.
pub fn adjust_partition_count(
    part: &SegmentPartition,
    line: &Polyline2D,
    count: usize,
) -> Result<SegmentPartition, SegmentationError> {
    let max = line.len() / 2;
    if count < 1 || count > max {
        return Err(SegmentationError::CountOutOfRange {
            requested: count,
            max,
        });
    }
    let steps = line.steps();
    let mut starts = part.starts.clone();
    let mut kinds = part.kinds.clone();
    let mut lengths = part.planar_lengths.clone();

    while starts.len() < count {
        let end_of = |m: usize, starts: &[usize]| starts.get(m + 1).copied().unwrap_or(line.len());
        let mut best: Option<usize> = None;
        for m in 0..starts.len() {
            if end_of(m, &starts) - starts[m] < 4 {
                continue;
            }
            if best.is_none_or(|b| lengths[m] > lengths[b]) {
                best = Some(m);
            }
        }
        let Some(m) = best else {
            regroup_pairs(&mut starts, &mut kinds, line.len())?;
            lengths = segment_lengths(&starts, line.len(), &steps);
            continue;
        };
        let (start, end) = (starts[m], end_of(m, &starts));
        // `cut` is the first point of the second child; both children keep >= 2 points.
        let half = lengths[m] / 2.0;
        let mut left: f64 = (start.max(1)..start + 2).map(|k| steps[k]).sum();
        let (mut cut, mut best_left) = (start + 2, left);
        for c in start + 3..=end - 2 {
            left += steps[c - 1];
            if (left - half).abs() < (best_left - half).abs() {
                cut = c;
                best_left = left;
            }
        }
        let left = best_left;
        let right: f64 = (cut..end).map(|k| steps[k]).sum();
        starts.insert(m + 1, cut);
        kinds.insert(m + 1, kinds[m]);
        lengths[m] = left;
        lengths.insert(m + 1, right);
    }

    while starts.len() > count {
        let shortest =
            (0..lengths.len()).fold(0, |b, m| if lengths[m] < lengths[b] { m } else { b });
        let left = shortest.checked_sub(1);
        let right = (shortest + 1 < lengths.len()).then_some(shortest + 1);
        let neighbor = match (left, right) {
            (Some(l), Some(r)) => {
                if lengths[r] < lengths[l] {
                    r
                } else {
                    l
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("count >= 1"),
        };
        let (keep, drop) = if neighbor < shortest {
            (neighbor, shortest)
        } else {
            (shortest, neighbor)
        };
        if kinds[drop] == SegmentKind::Curved {
            kinds[keep] = SegmentKind::Curved;
        }
        lengths[keep] += lengths[drop];
        starts.remove(drop);
        kinds.remove(drop);
        lengths.remove(drop);
    }

    SegmentPartition::from_starts(starts, kinds, &steps)
}

fn segment_lengths(starts: &[usize], n: usize, steps: &[f64]) -> Vec<f64> {
    (0..starts.len())
        .map(|m| {
            let end = starts.get(m + 1).copied().unwrap_or(n);
            steps[starts[m].max(1)..end].iter().sum()
        })
        .collect()
}

/// Adds one segment when every segment has two or three points: the span
/// from the first three-point segment through the next one is re-cut into
/// two-point segments. A piece is curved if any segment it overlaps was.
fn regroup_pairs(
    starts: &mut Vec<usize>,
    kinds: &mut Vec<SegmentKind>,
    n: usize,
) -> Result<(), SegmentationError> {
    let end_of = |m: usize, starts: &[usize]| starts.get(m + 1).copied().unwrap_or(n);
    let threes: Vec<usize> = (0..starts.len())
        .filter(|&m| end_of(m, starts) - starts[m] == 3)
        .take(2)
        .collect();
    let [first, last] = threes[..] else {
        return Err(SegmentationError::CannotSplit);
    };
    let (lo, hi) = (starts[first], end_of(last, starts));
    let new_starts: Vec<usize> = (lo..hi).step_by(2).collect();
    let new_kinds: Vec<SegmentKind> = new_starts
        .iter()
        .map(|&a| {
            let curved = (first..=last).any(|m| {
                kinds[m] == SegmentKind::Curved && starts[m] < a + 2 && end_of(m, starts) > a
            });
            if curved {
                SegmentKind::Curved
            } else {
                SegmentKind::Straight
            }
        })
        .collect();
    starts.splice(first..=last, new_starts);
    kinds.splice(first..=last, new_kinds);
    Ok(())
}
