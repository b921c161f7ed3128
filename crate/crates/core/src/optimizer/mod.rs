//! Projected gradient descent over per-segment height differences.
//!
//! Gradients are secant estimates built from the cost change between
//! successive iterates. After every update each segment's implied slope
//! `h_m / d_m` is clamped into the allowed slope band.

mod cost;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use cost::CostModel;
pub use cost::{cost, segment_slopes, CostBreakdown};

use crate::geometry::{curvature_2d, scale_xy, GeometryError, Polyline2D, Polyline3D};
use crate::segmentation::SegmentPartition;

/// Lower bound applied when the scale factor is driven non-positive.
pub const MIN_SCALE: f64 = 1e-3;

/// Half-width of the relative perturbation applied to the initial heights.
pub const INIT_JITTER: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Design targets for a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackTargets {
    /// Total 3D length `L` in meters.
    pub total_length: f64,
    /// Height difference `H` between start and lowest point, in meters.
    pub height_difference: f64,
    /// Target mean of the per-segment slopes.
    pub average_slope: f64,
    #[serde(default)]
    pub slope_min: f64,
    pub slope_max: f64,
}

impl TrackTargets {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |msg: &str| Err(OptimizerError::InvalidTargets(msg.to_owned()));
        let all = [
            self.total_length,
            self.height_difference,
            self.average_slope,
            self.slope_min,
            self.slope_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        if self.total_length <= 0.0 {
            return bad("total_length must be > 0");
        }
        if self.height_difference <= 0.0 {
            return bad("height_difference must be > 0");
        }
        if self.slope_min >= self.slope_max {
            return bad("slope_min must be < slope_max");
        }
        if !(self.slope_min..=self.slope_max).contains(&self.average_slope) {
            return bad("average_slope must lie within [slope_min, slope_max]");
        }
        Ok(())
    }

    pub fn clamp_slope(&self, slope: f64) -> f64 {
        slope.clamp(self.slope_min, self.slope_max)
    }
}

/// Weights of the length, height, curvature and average-slope residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.7,
            c: 1.0,
            d: 1.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let w = [self.a, self.b, self.c, self.d];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(OptimizerError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(OptimizerError::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Step size for the height update.
    pub learning_rate: f64,
    /// Step size for the scale-factor update.
    pub scale_learning_rate: f64,
    /// Stop once successive costs differ by less than this.
    pub convergence_threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Coordinates that moved less than this get a zero secant gradient.
    pub secant_epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            scale_learning_rate: 1e-5,
            convergence_threshold: 1e-3,
            max_iterations: 100_000,
            seed: 0,
            secant_epsilon: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |msg: &str| Err(OptimizerError::InvalidConfig(msg.to_owned()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.scale_learning_rate.is_finite() && self.scale_learning_rate > 0.0) {
            return bad("scale_learning_rate must be > 0");
        }
        if !(self.convergence_threshold.is_finite() && self.convergence_threshold > 0.0) {
            return bad("convergence_threshold must be > 0");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.secant_epsilon.is_finite() && self.secant_epsilon >= 0.0) {
            return bad("secant_epsilon must be >= 0");
        }
        Ok(())
    }
}

/// Iterate of the descent: current heights plus the previous iterate the
/// next secant gradient is taken against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    /// Height drop per segment in meters (positive = descending).
    pub heights: Vec<f64>,
    pub previous_heights: Option<Vec<f64>>,
    pub previous_cost: Option<f64>,
    /// Planar scale factor, present only when scale is optimized too.
    pub scale: Option<f64>,
    pub iteration: usize,
}

impl OptimizerState {
    pub fn new(heights: Vec<f64>) -> Self {
        Self {
            heights,
            previous_heights: None,
            previous_cost: None,
            scale: None,
            iteration: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub centerline: Polyline3D,
    /// Partition measured on the centerline's planar projection.
    pub partition: SegmentPartition,
    pub final_state: OptimizerState,
    pub final_cost: CostBreakdown,
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub recovered_scale: Option<f64>,
    /// Set when the scale update went non-positive and was clamped.
    pub scale_clamped: bool,
}

/// Proportional split of `H` over the segments with a seeded ±20% jitter,
/// projected into the slope band.
pub fn init_heights(part: &SegmentPartition, targets: &TrackTargets, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_heights_with(part.planar_lengths(), targets, &mut rng)
}

fn init_heights_with(lengths: &[f64], targets: &TrackTargets, rng: &mut impl Rng) -> Vec<f64> {
    let jitter: Vec<f64> = (0..lengths.len())
        .map(|_| rng.gen_range(-INIT_JITTER..=INIT_JITTER))
        .collect();
    proportional_heights(lengths, targets, &jitter)
}

/// `h_m = H · d_m / Σd · (1 + u_m)`, projected.
pub fn proportional_heights(lengths: &[f64], targets: &TrackTargets, jitter: &[f64]) -> Vec<f64> {
    let total: f64 = lengths.iter().sum();
    let raw: Vec<f64> = lengths
        .iter()
        .zip(jitter)
        .map(|(d, u)| targets.height_difference * d / total * (1.0 + u))
        .collect();
    project_heights(&raw, lengths, targets)
}

/// Elevations by the recursion `z_1 = H`, `z_k = z_{k−1} − d·g_m`, with `g_m`
/// the slope of the segment that owns point `k`.
pub fn reconstruct_elevation(
    line: &Polyline2D,
    part: &SegmentPartition,
    heights: &[f64],
    start_height: f64,
) -> Result<Polyline3D, OptimizerError> {
    if heights.len() != part.len() {
        return Err(OptimizerError::LengthMismatch {
            expected: part.len(),
            got: heights.len(),
        });
    }
    if part.n_points() != line.len() {
        return Err(OptimizerError::LengthMismatch {
            expected: line.len(),
            got: part.n_points(),
        });
    }
    let slopes = slopes_from_heights(heights, part.planar_lengths())?;
    let steps = line.steps();
    let mut z = Vec::with_capacity(line.len());
    z.push(start_height);
    for (m, slope) in slopes.iter().enumerate() {
        for k in part.step_range(m) {
            let prev = z[k - 1];
            z.push(prev - steps[k] * slope);
        }
    }
    Ok(line.lift(&z))
}

/// `g_m = h_m / d_m`.
pub fn slopes_from_heights(heights: &[f64], lengths: &[f64]) -> Result<Vec<f64>, OptimizerError> {
    if heights.len() != lengths.len() {
        return Err(OptimizerError::LengthMismatch {
            expected: lengths.len(),
            got: heights.len(),
        });
    }
    Ok(heights.iter().zip(lengths).map(|(h, d)| h / d).collect())
}

/// Clamps each implied slope into `[slope_min, slope_max]` by rescaling its height.
pub fn project_heights(heights: &[f64], lengths: &[f64], targets: &TrackTargets) -> Vec<f64> {
    heights
        .iter()
        .zip(lengths)
        .map(|(&h, &d)| {
            let g = h / d;
            if g <= targets.slope_min {
                targets.slope_min * d
            } else if g >= targets.slope_max {
                targets.slope_max * d
            } else {
                h
            }
        })
        .collect()
}

/// Componentwise secant `(J_i − J_{i−1}) / (h_i,m − h_{i−1},m)` with a single
/// scalar cost change; components that moved less than `eps` get zero.
pub fn secant_gradient(
    current: &[f64],
    previous: &[f64],
    current_cost: f64,
    previous_cost: f64,
    eps: f64,
) -> Vec<f64> {
    let dj = current_cost - previous_cost;
    current
        .iter()
        .zip(previous)
        .map(|(c, p)| {
            let dh = c - p;
            if dh.abs() < eps {
                0.0
            } else {
                dj / dh
            }
        })
        .collect()
}

/// Secant gradient with the cost change split along a coordinate path.
///
/// `path_costs[0]` is the cost at `previous`; `path_costs[m + 1]` is the cost
/// after coordinates `0..=m` have moved to their `current` values. The
/// per-coordinate changes telescope to `J_i − J_{i−1}`, and with a single
/// coordinate this is exactly [`secant_gradient`].
pub fn path_secant_gradient(
    current: &[f64],
    previous: &[f64],
    path_costs: &[f64],
    eps: f64,
) -> Vec<f64> {
    debug_assert_eq!(path_costs.len(), current.len() + 1);
    current
        .iter()
        .zip(previous)
        .zip(path_costs.windows(2))
        .map(|((c, p), w)| {
            let dh = c - p;
            if dh.abs() < eps {
                0.0
            } else {
                (w[1] - w[0]) / dh
            }
        })
        .collect()
}

/// One descent step `h ← P(h − η·∇J)`; the current iterate becomes the previous one.
pub fn pgd_step(
    state: &OptimizerState,
    gradient: &[f64],
    config: &OptimizerConfig,
    lengths: &[f64],
    targets: &TrackTargets,
) -> OptimizerState {
    let stepped: Vec<f64> = state
        .heights
        .iter()
        .zip(gradient)
        .map(|(h, g)| h - config.learning_rate * g)
        .collect();
    OptimizerState {
        heights: project_heights(&stepped, lengths, targets),
        previous_heights: Some(state.heights.clone()),
        previous_cost: state.previous_cost,
        scale: state.scale,
        iteration: state.iteration + 1,
    }
}

fn validate_inputs(
    line: &Polyline2D,
    part: &SegmentPartition,
    targets: &TrackTargets,
    weights: &CostWeights,
    config: &OptimizerConfig,
) -> Result<(), OptimizerError> {
    targets.validate()?;
    weights.validate()?;
    config.validate()?;
    if part.n_points() != line.len() {
        return Err(OptimizerError::LengthMismatch {
            expected: line.len(),
            got: part.n_points(),
        });
    }
    Ok(())
}

/// Runs the descent on a fixed planar centerline.
pub fn optimize(
    line: &Polyline2D,
    part: &SegmentPartition,
    targets: &TrackTargets,
    weights: &CostWeights,
    config: &OptimizerConfig,
) -> Result<RunResult, OptimizerError> {
    validate_inputs(line, part, targets, weights, config)?;
    Descent::new(line, part, targets, weights, config, None)?.run()
}

/// Runs the descent with the planar scale factor as an extra variable,
/// starting from `f_init`.
pub fn optimize_with_scale(
    line: &Polyline2D,
    part: &SegmentPartition,
    targets: &TrackTargets,
    weights: &CostWeights,
    config: &OptimizerConfig,
    f_init: f64,
) -> Result<RunResult, OptimizerError> {
    validate_inputs(line, part, targets, weights, config)?;
    if !(f_init.is_finite() && f_init > 0.0) {
        return Err(GeometryError::InvalidScale(f_init).into());
    }
    Descent::new(line, part, targets, weights, config, Some(f_init))?.run()
}

struct Descent<'a> {
    line: &'a Polyline2D,
    part: &'a SegmentPartition,
    targets: &'a TrackTargets,
    weights: &'a CostWeights,
    config: &'a OptimizerConfig,
    scale: Option<f64>,
    rng: ChaCha8Rng,
}

impl<'a> Descent<'a> {
    fn new(
        line: &'a Polyline2D,
        part: &'a SegmentPartition,
        targets: &'a TrackTargets,
        weights: &'a CostWeights,
        config: &'a OptimizerConfig,
        scale: Option<f64>,
    ) -> Result<Self, OptimizerError> {
        Ok(Self {
            line,
            part,
            targets,
            weights,
            config,
            scale,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    fn model(&self, f: f64) -> Result<CostModel<'a>, OptimizerError> {
        if self.scale.is_none() {
            let k2d = curvature_2d(self.line)?;
            return Ok(CostModel::new(
                self.line,
                self.part.clone(),
                k2d.values().to_vec(),
                self.targets,
                self.weights,
            ));
        }
        let scaled = scale_xy(self.line, f)?;
        let k2d = curvature_2d(&scaled)?;
        Ok(CostModel::new(
            &scaled,
            self.part.remeasured(&scaled),
            k2d.values().to_vec(),
            self.targets,
            self.weights,
        ))
    }

    fn update_scale(&self, f: f64, gradient: f64, clamped: &mut bool) -> f64 {
        let next = f - self.config.scale_learning_rate * gradient;
        if next > MIN_SCALE && next.is_finite() {
            next
        } else {
            *clamped = true;
            MIN_SCALE
        }
    }

    fn run(mut self) -> Result<RunResult, OptimizerError> {
        let config = self.config;
        let eps = config.secant_epsilon;
        let scaled = self.scale.is_some();
        let mut scale_clamped = false;

        let mut prev_f = self.scale.unwrap_or(1.0);
        let mut model = self.model(prev_f)?;
        let mut prev_h = init_heights_with(
            model.partition().planar_lengths(),
            self.targets,
            &mut self.rng,
        );
        let mut prev_j = model.set_heights(&prev_h)?;
        let mut history = vec![prev_j];

        // First move: no secant history yet, so the gradient is drawn at random.
        let random: Vec<f64> = (0..prev_h.len())
            .map(|_| self.rng.gen_range(-1.0..=1.0))
            .collect();
        let random_f: f64 = self.rng.gen_range(-1.0..=1.0);
        let mut curr_f = if scaled {
            self.update_scale(prev_f, random_f, &mut scale_clamped)
        } else {
            prev_f
        };
        if scaled {
            model = self.model(curr_f)?;
        }
        let mut state = pgd_step(
            &OptimizerState {
                heights: prev_h.clone(),
                previous_heights: None,
                previous_cost: None,
                scale: self.scale,
                iteration: 0,
            },
            &random,
            config,
            model.partition().planar_lengths(),
            self.targets,
        );
        let mut converged = false;
        let mut path = Vec::with_capacity(prev_h.len() + 1);

        loop {
            // Walk from the previous iterate to the current one, one coordinate at a time.
            path.clear();
            path.push(model.set_heights(&prev_h)?);
            for (m, &h) in state.heights.iter().enumerate() {
                path.push(model.set_height(m, h)?);
            }
            let curr_j = *path.last().expect("path holds at least one cost");
            history.push(curr_j);
            state.previous_cost = Some(prev_j);

            // The random first move is not a descent step, so it never ends the run.
            if state.iteration > 1 && (curr_j - prev_j).abs() < config.convergence_threshold {
                converged = true;
                break;
            }
            if state.iteration >= config.max_iterations {
                break;
            }

            let gradient = path_secant_gradient(&state.heights, &prev_h, &path, eps);
            let next_f = if scaled {
                let df = curr_f - prev_f;
                let g_f = if df.abs() < eps {
                    0.0
                } else {
                    (path[0] - prev_j) / df
                };
                self.update_scale(curr_f, g_f, &mut scale_clamped)
            } else {
                curr_f
            };

            let next_model = if scaled && next_f != curr_f {
                Some(self.model(next_f)?)
            } else {
                None
            };
            let lengths = next_model
                .as_ref()
                .unwrap_or(&model)
                .partition()
                .planar_lengths()
                .to_vec();
            let next = pgd_step(&state, &gradient, config, &lengths, self.targets);

            prev_h = std::mem::take(&mut state.heights);
            prev_j = curr_j;
            prev_f = curr_f;
            curr_f = next_f;
            state = next;
            if let Some(m) = next_model {
                model = m;
            }
        }

        let scaled_line;
        let line = if scaled {
            scaled_line = scale_xy(self.line, curr_f)?;
            &scaled_line
        } else {
            self.line
        };
        let partition = model.partition().clone();
        let centerline = reconstruct_elevation(
            line,
            &partition,
            &state.heights,
            self.targets.height_difference,
        )?;
        state.scale = scaled.then_some(curr_f);
        let final_cost = model.breakdown();
        Ok(RunResult {
            centerline,
            partition,
            iterations: state.iteration,
            final_state: state,
            final_cost,
            cost_history: history,
            converged,
            recovered_scale: scaled.then_some(curr_f),
            scale_clamped,
        })
    }
}

#[cfg(test)]
mod tests;
