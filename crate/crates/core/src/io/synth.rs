use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, Point2D, Polyline2D, Polyline3D};
use crate::optimizer::reconstruct_elevation;
use crate::segmentation::{SegmentKind, SegmentPartition};

use super::IoError;

/// A building block of a synthetic planar track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Primitive {
    Line {
        length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
    },
    /// Circular arc; positive sweep turns left.
    Arc {
        radius: f64,
        sweep: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
    },
}

impl Primitive {
    pub fn length(&self) -> f64 {
        match *self {
            Self::Line { length, .. } => length,
            Self::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match *self {
            Self::Line { slope, .. } | Self::Arc { slope, .. } => slope,
        }
    }

    pub fn kind(&self) -> SegmentKind {
        match self {
            Self::Line { .. } => SegmentKind::Straight,
            Self::Arc { .. } => SegmentKind::Curved,
        }
    }

    fn validate(&self) -> Result<(), String> {
        match *self {
            Self::Line { length, .. } if !(length.is_finite() && length > 0.0) => {
                Err("line length must be > 0".into())
            }
            Self::Arc { radius, .. } if !(radius.is_finite() && radius > 0.0) => {
                Err("arc radius must be > 0".into())
            }
            Self::Arc { sweep, .. } if !sweep.is_finite() || sweep == 0.0 => {
                Err("arc sweep must be non-zero".into())
            }
            _ if self.slope().is_some_and(|g| !g.is_finite()) => Err("slope must be finite".into()),
            _ => Ok(()),
        }
    }

    /// Position after travelling `s` along the primitive from `origin` with `heading`.
    fn point_at(&self, origin: Point2D, heading: f64, s: f64) -> Point2D {
        match *self {
            Self::Line { .. } => {
                Point2D::new(origin.x + s * heading.cos(), origin.y + s * heading.sin())
            }
            Self::Arc { radius, sweep, .. } => {
                let side = sweep.signum();
                let t = side * s / radius;
                let r = side * radius;
                Point2D::new(
                    origin.x + r * ((heading + t).sin() - heading.sin()),
                    origin.y + r * (heading.cos() - (heading + t).cos()),
                )
            }
        }
    }

    fn end_heading(&self, heading: f64) -> f64 {
        match *self {
            Self::Line { .. } => heading,
            Self::Arc { sweep, .. } => heading + sweep,
        }
    }
}

/// Tangent-continuous chain of primitives starting at `start` with `heading` (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRecipe {
    #[serde(default)]
    pub start: [f64; 2],
    #[serde(default)]
    pub heading: f64,
    pub primitives: Vec<Primitive>,
}

impl SynthRecipe {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self {
            start: [0.0, 0.0],
            heading: 0.0,
            primitives,
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.primitives.is_empty() {
            return Err(IoError::invalid(
                "primitives",
                "need at least one primitive",
            ));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            p.validate()
                .map_err(|msg| IoError::invalid(format!("primitives[{i}]"), msg))?;
        }
        let with_slope = self
            .primitives
            .iter()
            .filter(|p| p.slope().is_some())
            .count();
        if with_slope != 0 && with_slope != self.primitives.len() {
            return Err(IoError::invalid(
                "primitives",
                "give a slope for every primitive or for none",
            ));
        }
        Ok(())
    }

    pub fn planar_length(&self) -> f64 {
        self.primitives.iter().map(Primitive::length).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrack {
    pub line: Polyline2D,
    /// One segment per primitive, straight for lines and curved for arcs.
    pub partition: SegmentPartition,
    /// Exact elevations from the per-primitive slopes, ending at z = 0.
    pub ground_truth: Option<Polyline3D>,
}

/// Samples every primitive at (close to) `spacing` with at least two intervals each.
pub fn synth_track(recipe: &SynthRecipe, spacing: f64) -> Result<SyntheticTrack, IoError> {
    recipe.validate()?;
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(GeometryError::InvalidSpacing(spacing).into());
    }
    let mut points = vec![Point2D::new(recipe.start[0], recipe.start[1])];
    let mut heading = recipe.heading;
    let mut starts = Vec::with_capacity(recipe.primitives.len());
    for p in &recipe.primitives {
        // the joint point belongs to the earlier primitive, so each primitive's
        // segment starts one past it and owns only its own steps
        starts.push(if starts.is_empty() { 0 } else { points.len() });
        let origin = *points.last().expect("start point present");
        let length = p.length();
        let intervals = ((length / spacing).round() as usize).max(2);
        let gap = length / intervals as f64;
        points.extend((1..=intervals).map(|i| p.point_at(origin, heading, gap * i as f64)));
        heading = p.end_heading(heading);
    }
    let line = Polyline2D::new(points)?;
    let kinds: Vec<SegmentKind> = recipe.primitives.iter().map(Primitive::kind).collect();
    let partition = SegmentPartition::from_boundaries(&line, &starts, &kinds)
        .map_err(|e| IoError::invalid("primitives", e))?;

    let ground_truth = if recipe.primitives[0].slope().is_some() {
        let heights: Vec<f64> = recipe
            .primitives
            .iter()
            .zip(partition.planar_lengths())
            .map(|(p, d)| p.slope().expect("validated") * d)
            .collect();
        let total: f64 = heights.iter().sum();
        let truth = reconstruct_elevation(&line, &partition, &heights, total)
            .map_err(|e| IoError::invalid("primitives", e))?;
        Some(truth)
    } else {
        None
    };
    Ok(SyntheticTrack {
        line,
        partition,
        ground_truth,
    })
}

pub fn parse_recipe(text: &str) -> Result<SynthRecipe, IoError> {
    let recipe: SynthRecipe = IoError::from_json(text)?;
    recipe.validate()?;
    Ok(recipe)
}

pub fn read_recipe(path: &Path) -> Result<SynthRecipe, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_recipe(&text)
}
