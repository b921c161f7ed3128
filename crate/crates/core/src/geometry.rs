//! Discrete differential geometry of sampled centerlines.
//!
//! Curvature is evaluated with finite differences over the sample index, so the
//! parameter step is one sample. Curvature is invariant under reparameterization,
//! which keeps planar and spatial values directly comparable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Squared first-derivative magnitude below which a sample is degenerate.
pub const DEGENERATE_SPEED_SQ: f64 = 1e-12;

/// Default arc-length gap used when resampling raw centerlines, in meters.
pub const DEFAULT_SPACING: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("spacing {spacing} exceeds half the arc length {length}")]
    SpacingTooLarge { spacing: f64, length: f64 },
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("degenerate derivative at point {0}")]
    Degenerate(usize),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn with_z(self, z: f64) -> Point3D {
        Point3D::new(self.x, self.y, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn xy(&self) -> Point2D {
        Point2D::new(self.x, self.y)
    }
}

/// An ordered planar centerline with at least three distinct consecutive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2D {
    points: Vec<Point2D>,
    spacing: f64,
}

impl Polyline2D {
    /// Validates the points and records the mean planar gap as the spacing.
    pub fn new(points: Vec<Point2D>) -> Result<Self, GeometryError> {
        validate_2d(&points)?;
        let length = path_length(&points);
        let spacing = length / (points.len() - 1) as f64;
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[Point2D] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nominal arc-length gap between consecutive samples.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Planar step lengths; entry `k` is the step from point `k - 1` to `k`, entry 0 is zero.
    pub fn steps(&self) -> Vec<f64> {
        let mut steps = Vec::with_capacity(self.points.len());
        steps.push(0.0);
        steps.extend(self.points.windows(2).map(|w| planar_step(w[0], w[1])));
        steps
    }

    pub fn total_length(&self) -> f64 {
        path_length(&self.points)
    }

    pub fn lift(&self, z: &[f64]) -> Polyline3D {
        assert_eq!(z.len(), self.points.len(), "one elevation per point");
        Polyline3D {
            points: self
                .points
                .iter()
                .zip(z)
                .map(|(p, &z)| p.with_z(z))
                .collect(),
        }
    }
}

/// An ordered spatial centerline.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline3D {
    points: Vec<Point3D>,
}

impl Polyline3D {
    pub fn new(points: Vec<Point3D>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3D] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn z(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.z).collect()
    }

    /// Drops elevation.
    pub fn projection(&self) -> Result<Polyline2D, GeometryError> {
        Polyline2D::new(self.points.iter().map(Point3D::xy).collect())
    }
}

/// Per-point curvature values in 1/m.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    values: Vec<f64>,
}

impl CurvatureProfile {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }
}

fn validate_2d(points: &[Point2D]) -> Result<(), GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite(i));
    }
    if let Some(i) = points
        .windows(2)
        .position(|w| planar_step(w[0], w[1]) <= 0.0)
    {
        return Err(GeometryError::CoincidentPoints(i, i + 1));
    }
    Ok(())
}

fn path_length(points: &[Point2D]) -> f64 {
    points.windows(2).map(|w| planar_step(w[0], w[1])).sum()
}

pub fn planar_step(prev: Point2D, curr: Point2D) -> f64 {
    (curr.x - prev.x).hypot(curr.y - prev.y)
}

pub fn spatial_step(prev: Point3D, curr: Point3D) -> f64 {
    let (dx, dy, dz) = (curr.x - prev.x, curr.y - prev.y, curr.z - prev.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn total_length_3d(line: &Polyline3D) -> f64 {
    line.points
        .windows(2)
        .map(|w| spatial_step(w[0], w[1]))
        .sum()
}

/// Resamples a raw polyline at equal arc-length intervals along its
/// piecewise-linear interpolant.
///
/// The interval count is `round(length / spacing)`, so the realized gap is the
/// nearest value that lands exactly on the final raw point.
pub fn resample_uniform(raw: &[Point2D], spacing: f64) -> Result<Polyline2D, GeometryError> {
    if raw.len() < 2 {
        return Err(GeometryError::TooFewPoints {
            needed: 2,
            got: raw.len(),
        });
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(GeometryError::InvalidSpacing(spacing));
    }
    if let Some(i) = raw.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite(i));
    }
    let mut cumulative = Vec::with_capacity(raw.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in raw.windows(2) {
        acc += planar_step(w[0], w[1]);
        cumulative.push(acc);
    }
    let length = acc;
    if spacing > length / 2.0 {
        return Err(GeometryError::SpacingTooLarge { spacing, length });
    }
    let intervals = ((length / spacing).round() as usize).max(2);
    let gap = length / intervals as f64;

    let mut points = Vec::with_capacity(intervals + 1);
    points.push(raw[0]);
    let mut seg = 0;
    for i in 1..intervals {
        let s = gap * i as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let t = if span > 0.0 {
            (s - cumulative[seg]) / span
        } else {
            0.0
        };
        points.push(raw[seg].lerp(raw[seg + 1], t.clamp(0.0, 1.0)));
    }
    points.push(raw[raw.len() - 1]);
    validate_2d(&points)?;
    Ok(Polyline2D {
        points,
        spacing: gap,
    })
}

/// First and second finite differences of `series` at index `k`.
///
/// Interior points use central differences. The boundaries use second-order
/// one-sided stencils (three points for the first difference, four for the
/// second; three when only three samples exist).
pub fn differences_at(series: &[f64], k: usize, spacing: f64) -> (f64, f64) {
    let n = series.len();
    debug_assert!(n >= 3 && k < n);
    let h = spacing;
    let s = series;
    if k == 0 {
        let first = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h);
        let second = if n >= 4 {
            (2.0 * s[0] - 5.0 * s[1] + 4.0 * s[2] - s[3]) / (h * h)
        } else {
            (s[0] - 2.0 * s[1] + s[2]) / (h * h)
        };
        (first, second)
    } else if k == n - 1 {
        let first = (3.0 * s[k] - 4.0 * s[k - 1] + s[k - 2]) / (2.0 * h);
        let second = if n >= 4 {
            (2.0 * s[k] - 5.0 * s[k - 1] + 4.0 * s[k - 2] - s[k - 3]) / (h * h)
        } else {
            (s[k] - 2.0 * s[k - 1] + s[k - 2]) / (h * h)
        };
        (first, second)
    } else {
        (
            (s[k + 1] - s[k - 1]) / (2.0 * h),
            (s[k + 1] - 2.0 * s[k] + s[k - 1]) / (h * h),
        )
    }
}

pub fn first_second_differences(
    series: &[f64],
    spacing: f64,
) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    if series.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: series.len(),
        });
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(GeometryError::InvalidSpacing(spacing));
    }
    Ok((0..series.len())
        .map(|k| differences_at(series, k, spacing))
        .unzip())
}

/// Curvature of a space curve from its first (`u`) and second (`v`) derivatives:
/// `sqrt(|u|²|v|² − (u·v)²) / |u|³`.
pub fn space_curvature(u: [f64; 3], v: [f64; 3]) -> f64 {
    let uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let uv = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    // Lagrange identity; clamp rounding below zero.
    let cross_sq = (uu * vv - uv * uv).max(0.0);
    cross_sq.sqrt() / (uu * uu.sqrt())
}

/// Per-axis first and second differences of a planar centerline over the sample index.
#[derive(Debug, Clone)]
pub(crate) struct PlanarDerivatives {
    pub xd: Vec<f64>,
    pub yd: Vec<f64>,
    pub xdd: Vec<f64>,
    pub ydd: Vec<f64>,
}

impl PlanarDerivatives {
    pub fn of(line: &Polyline2D) -> Self {
        let xs: Vec<f64> = line.points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = line.points.iter().map(|p| p.y).collect();
        let n = xs.len();
        let mut out = Self {
            xd: Vec::with_capacity(n),
            yd: Vec::with_capacity(n),
            xdd: Vec::with_capacity(n),
            ydd: Vec::with_capacity(n),
        };
        for k in 0..n {
            let (xd, xdd) = differences_at(&xs, k, 1.0);
            let (yd, ydd) = differences_at(&ys, k, 1.0);
            out.xd.push(xd);
            out.yd.push(yd);
            out.xdd.push(xdd);
            out.ydd.push(ydd);
        }
        out
    }
}

pub fn curvature_2d(line: &Polyline2D) -> Result<CurvatureProfile, GeometryError> {
    let d = PlanarDerivatives::of(line);
    let values = (0..line.len())
        .map(|k| {
            let speed_sq = d.xd[k] * d.xd[k] + d.yd[k] * d.yd[k];
            if speed_sq < DEGENERATE_SPEED_SQ {
                return Err(GeometryError::Degenerate(k));
            }
            Ok((d.xdd[k] * d.yd[k] - d.xd[k] * d.ydd[k]).abs() / speed_sq.powf(1.5))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurvatureProfile::new(values))
}

pub fn curvature_3d(line: &Polyline3D) -> Result<CurvatureProfile, GeometryError> {
    if line.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: line.len(),
        });
    }
    let axis = |f: fn(&Point3D) -> f64| -> Vec<f64> { line.points.iter().map(f).collect() };
    let (xs, ys, zs) = (axis(|p| p.x), axis(|p| p.y), axis(|p| p.z));
    let values = (0..line.len())
        .map(|k| {
            let (xd, xdd) = differences_at(&xs, k, 1.0);
            let (yd, ydd) = differences_at(&ys, k, 1.0);
            let (zd, zdd) = differences_at(&zs, k, 1.0);
            if xd * xd + yd * yd + zd * zd < DEGENERATE_SPEED_SQ {
                return Err(GeometryError::Degenerate(k));
            }
            Ok(space_curvature([xd, yd, zd], [xdd, ydd, zdd]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurvatureProfile::new(values))
}

/// Isotropic, origin-anchored planar scaling.
pub fn scale_xy(line: &Polyline2D, f: f64) -> Result<Polyline2D, GeometryError> {
    if !(f.is_finite() && f > 0.0) {
        return Err(GeometryError::InvalidScale(f));
    }
    let points: Vec<Point2D> = line
        .points
        .iter()
        .map(|p| Point2D::new(p.x * f, p.y * f))
        .collect();
    validate_2d(&points)?;
    Ok(Polyline2D {
        points,
        spacing: line.spacing * f,
    })
}
