use super::*;
use crate::geometry::fixtures::{arc, line};
use crate::geometry::{total_length_3d, CurvatureProfile, Point2D};
use crate::segmentation::SegmentKind;
use proptest::prelude::*;

fn targets(l: f64, h: f64, avg: f64, lo: f64, hi: f64) -> TrackTargets {
    TrackTargets {
        total_length: l,
        height_difference: h,
        average_slope: avg,
        slope_min: lo,
        slope_max: hi,
    }
}

fn whistler_like() -> TrackTargets {
    targets(100.0, 10.0, 0.1, 0.0, 0.204)
}

fn unit_weights() -> CostWeights {
    CostWeights {
        a: 1.0,
        b: 1.0,
        c: 1.0,
        d: 1.0,
    }
}

/// Straight line of 21 points split into two 10 m segments.
fn two_segment_line() -> (Polyline2D, SegmentPartition) {
    let l = line(21, 1.0);
    let part = SegmentPartition::from_boundaries(
        &l,
        &[0, 11],
        &[SegmentKind::Straight, SegmentKind::Straight],
    )
    .unwrap();
    (l, part)
}

/// Gently winding planar line with a few segments of both kinds.
fn wavy() -> (Polyline2D, SegmentPartition) {
    let pts: Vec<Point2D> = (0..80)
        .map(|i| {
            let t = i as f64;
            Point2D::new(t, 6.0 * (t / 9.0).sin())
        })
        .collect();
    let l = Polyline2D::new(pts).unwrap();
    let kinds = [
        SegmentKind::Curved,
        SegmentKind::Straight,
        SegmentKind::Curved,
        SegmentKind::Curved,
    ];
    let part = SegmentPartition::from_boundaries(&l, &[0, 17, 33, 55], &kinds).unwrap();
    (l, part)
}

#[test]
fn validation_rejects_bad_inputs() {
    assert!(whistler_like().validate().is_ok());
    assert!(targets(0.0, 1.0, 0.1, 0.0, 0.2).validate().is_err());
    assert!(targets(10.0, 0.0, 0.1, 0.0, 0.2).validate().is_err());
    assert!(targets(10.0, 1.0, 0.1, 0.2, 0.2).validate().is_err());
    assert!(targets(10.0, 1.0, 0.3, 0.0, 0.2).validate().is_err());
    assert!(CostWeights::default().validate().is_ok());
    let zero = CostWeights {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };
    assert!(zero.validate().is_err());
    let negative = CostWeights {
        b: -1.0,
        ..CostWeights::default()
    };
    assert!(negative.validate().is_err());
    assert!(OptimizerConfig::default().validate().is_ok());
    let bad = OptimizerConfig {
        max_iterations: 0,
        ..OptimizerConfig::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn default_weights_and_config() {
    let w = CostWeights::default();
    assert_eq!((w.a, w.b, w.c, w.d), (1.0, 0.7, 1.0, 1.0));
    let c = OptimizerConfig::default();
    assert_eq!(c.learning_rate, 1e-5);
    assert_eq!(c.convergence_threshold, 1e-3);
    assert_eq!(c.max_iterations, 100_000);
    assert_eq!(c.secant_epsilon, 1e-9);
}

#[test]
fn init_single_segment_is_clamped_proportional_split() {
    let l = line(11, 1.0);
    let part = SegmentPartition::whole(&l, SegmentKind::Straight);
    // bounds tight enough that any jitter is projected away
    let t = targets(10.0, 5.0, 0.1, 0.0, 0.1);
    let h = init_heights(&part, &t, 7);
    assert_eq!(h, vec![1.0]);
}

#[test]
fn init_without_jitter_splits_height_by_length() {
    let (_, part) = two_segment_line();
    let h = proportional_heights(
        part.planar_lengths(),
        &targets(20.0, 2.0, 0.1, 0.0, 0.5),
        &[0.0, 0.0],
    );
    assert_eq!(h, vec![1.0, 1.0]);
}

#[test]
fn init_is_deterministic_and_bounded() {
    let (_, part) = wavy();
    let t = targets(100.0, 8.0, 0.1, 0.0, 0.2);
    let a = init_heights(&part, &t, 42);
    let b = init_heights(&part, &t, 42);
    assert_eq!(a, b);
    assert_ne!(a, init_heights(&part, &t, 43));
    let total: f64 = part.planar_lengths().iter().sum();
    for (h, d) in a.iter().zip(part.planar_lengths()) {
        let base = t.height_difference * d / total;
        assert!(*h >= 0.8 * base - 1e-12 && *h <= 1.2 * base + 1e-12);
    }
}

#[test]
fn reconstruct_constant_ramp() {
    let l = line(11, 1.0);
    let part = SegmentPartition::whole(&l, SegmentKind::Straight);
    let z = reconstruct_elevation(&l, &part, &[1.0], 1.0).unwrap().z();
    for (k, zk) in z.iter().enumerate() {
        assert!((zk - (1.0 - 0.1 * k as f64)).abs() < 1e-12);
    }
}

#[test]
fn reconstruct_flat_track() {
    let (l, part) = two_segment_line();
    let z = reconstruct_elevation(&l, &part, &[0.0, 0.0], 4.0)
        .unwrap()
        .z();
    assert!(z.iter().all(|&v| v == 4.0));
}

#[test]
fn reconstruct_two_segments_ends_at_zero() {
    let (l, part) = two_segment_line();
    let z = reconstruct_elevation(&l, &part, &[1.0, 2.0], 3.0)
        .unwrap()
        .z();
    assert!((z[10] - 2.0).abs() < 1e-12);
    assert!(z[20].abs() < 1e-12);
}

#[test]
fn reconstruct_rejects_mismatched_heights() {
    let (l, part) = two_segment_line();
    assert!(matches!(
        reconstruct_elevation(&l, &part, &[1.0], 3.0),
        Err(OptimizerError::LengthMismatch {
            expected: 2,
            got: 1
        })
    ));
}

#[test]
fn slope_ratios() {
    let s = slopes_from_heights(&[10.0, 0.0, 20.4], &[100.0, 50.0, 100.0]).unwrap();
    assert_eq!(s[0], 0.1);
    assert_eq!(s[1], 0.0);
    assert!((s[2] - 0.204).abs() < 1e-15);
    assert!(slopes_from_heights(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn cost_is_zero_when_targets_are_met() {
    let l = line(101, 1.0);
    let part = SegmentPartition::whole(&l, SegmentKind::Straight);
    let line3d = reconstruct_elevation(&l, &part, &[5.0], 5.0).unwrap();
    let t = targets(total_length_3d(&line3d), 5.0, 0.05, 0.0, 0.2);
    let k2d = curvature_2d(&l).unwrap();
    let j = cost(&line3d, &part, &k2d, &t, &unit_weights()).unwrap();
    assert!(j.total.abs() < 1e-12, "{j:?}");
}

#[test]
fn cost_of_flat_track_by_hand() {
    let l = line(101, 1.0);
    let part = SegmentPartition::whole(&l, SegmentKind::Straight);
    let flat = l.lift(&vec![0.0; 101]);
    let t = targets(100.0, 5.0, 0.05, 0.0, 0.2);
    let k2d = curvature_2d(&l).unwrap();
    let j = cost(&flat, &part, &k2d, &t, &unit_weights()).unwrap();
    assert!(j.length_term.abs() < 1e-12);
    assert!((j.height_term - 5.0).abs() < 1e-12);
    assert!(j.curvature_term.abs() < 1e-12);
    assert!((j.slope_term - 0.05).abs() < 1e-12);
    assert!((j.total - 5.05).abs() < 1e-12);
}

#[test]
fn doubling_b_doubles_only_the_height_term() {
    let (l, part) = wavy();
    let t = targets(90.0, 8.0, 0.1, 0.0, 0.2);
    let line3d = reconstruct_elevation(&l, &part, &[1.0, 3.0, 2.0, 1.5], 8.0).unwrap();
    let k2d = curvature_2d(&l).unwrap();
    let w = CostWeights::default();
    let w2 = CostWeights { b: 2.0 * w.b, ..w };
    let j1 = cost(&line3d, &part, &k2d, &t, &w).unwrap();
    let j2 = cost(&line3d, &part, &k2d, &t, &w2).unwrap();
    assert!((j2.height_term - 2.0 * j1.height_term).abs() < 1e-12);
    assert_eq!(j1.length_term, j2.length_term);
    assert_eq!(j1.curvature_term, j2.curvature_term);
    assert_eq!(j1.slope_term, j2.slope_term);
}

#[test]
fn cost_rejects_mismatched_profile() {
    let (l, part) = two_segment_line();
    let line3d = reconstruct_elevation(&l, &part, &[1.0, 1.0], 2.0).unwrap();
    let short = CurvatureProfile::new(vec![0.0; 5]);
    assert!(cost(&line3d, &part, &short, &whistler_like(), &unit_weights()).is_err());
}

#[test]
fn incremental_model_matches_full_cost() {
    let (l, part) = wavy();
    let t = targets(85.0, 9.0, 0.11, 0.0, 0.25);
    let w = CostWeights::default();
    let k2d = curvature_2d(&l).unwrap();
    let mut model = CostModel::new(&l, part.clone(), k2d.values().to_vec(), &t, &w);
    let mut h = vec![1.0, 2.0, 3.0, 2.5];
    model.set_heights(&h).unwrap();
    let moves = [(0, 0.4), (3, 5.0), (1, 0.0), (2, 1.7), (0, 2.2), (3, 0.1)];
    for (m, v) in moves {
        h[m] = v;
        let incremental = model.set_height(m, v).unwrap();
        let line3d = reconstruct_elevation(&l, &part, &h, t.height_difference).unwrap();
        let full = cost(&line3d, &part, &k2d, &t, &w).unwrap();
        assert!(
            (incremental - full.total).abs() < 1e-9,
            "{incremental} vs {full:?}"
        );
        let b = model.breakdown();
        assert!((b.curvature_term - full.curvature_term).abs() < 1e-9);
        assert!((b.slope_term - full.slope_term).abs() < 1e-12);
    }
}

#[test]
fn projection_examples() {
    let t = targets(100.0, 10.0, 0.1, 0.0, 0.204);
    assert_eq!(project_heights(&[10.0], &[100.0], &t), vec![10.0]);
    let clamped = project_heights(&[30.0], &[100.0], &t);
    assert!((clamped[0] - 20.4).abs() < 1e-12);
    assert_eq!(project_heights(&clamped, &[100.0], &t), clamped);
    assert_eq!(project_heights(&[-3.0], &[100.0], &t), vec![0.0]);
}

#[test]
fn secant_examples() {
    assert_eq!(
        secant_gradient(&[1.0, 2.0], &[1.0, 2.0], 3.0, 4.0, 1e-9),
        vec![0.0, 0.0]
    );
    assert_eq!(secant_gradient(&[2.0], &[1.0], 4.0, 5.0, 1e-9), vec![-1.0]);
    let f = |h: f64| (h - 3.0) * (h - 3.0);
    let g = secant_gradient(&[2.0], &[1.0], f(2.0), f(1.0), 1e-9)[0];
    assert!((g + 3.0).abs() < 1e-12);
    assert!((-4.0..=-2.0).contains(&g));
}

#[test]
fn path_secant_reduces_to_scalar_secant() {
    let g = path_secant_gradient(&[2.0], &[1.0], &[5.0, 4.0], 1e-9);
    assert_eq!(g, secant_gradient(&[2.0], &[1.0], 4.0, 5.0, 1e-9));
    // separable J = (h1 − 1)² + 3·h2: each coordinate sees only its own change
    let j = |a: f64, b: f64| (a - 1.0).powi(2) + 3.0 * b;
    let prev = [0.0, 0.0];
    let curr = [2.0, -1.0];
    let path = [j(0.0, 0.0), j(2.0, 0.0), j(2.0, -1.0)];
    let g = path_secant_gradient(&curr, &prev, &path, 1e-9);
    assert_eq!(g, vec![0.0, 3.0]);
    let stalled = path_secant_gradient(&[1.0, 2.0], &[1.0, 1.0], &[4.0, 4.0, 3.0], 1e-9);
    assert_eq!(stalled, vec![0.0, -1.0]);
}

#[test]
fn secant_brackets_true_derivative_on_cost() {
    let l = line(41, 1.0);
    let part = SegmentPartition::whole(&l, SegmentKind::Straight);
    let t = targets(40.5, 5.0, 0.1, 0.0, 0.3);
    let w = CostWeights::default();
    let k2d = curvature_2d(&l).unwrap();
    let j = |h: f64| {
        let l3 = reconstruct_elevation(&l, &part, &[h], t.height_difference).unwrap();
        cost(&l3, &part, &k2d, &t, &w).unwrap().total
    };
    let derivative = |h: f64| (j(h + 1e-4) - j(h - 1e-4)) / 2e-4;
    let (h0, h1) = (1.0, 1.5);
    let g = secant_gradient(&[h1], &[h0], j(h1), j(h0), 1e-9)[0];
    let (d0, d1) = (derivative(h0), derivative(h1));
    assert_eq!(g.signum(), d0.signum());
    assert_eq!(g.signum(), d1.signum());
    assert!(g >= d0.min(d1) - 1e-9 && g <= d0.max(d1) + 1e-9);
}

#[test]
fn pgd_step_examples() {
    let t = targets(100.0, 10.0, 0.1, -1.0, 1.0);
    let cfg = OptimizerConfig::default();
    let state = OptimizerState::new(vec![1.0]);
    let still = pgd_step(&state, &[0.0], &cfg, &[10.0], &t);
    assert_eq!(still.heights, vec![1.0]);
    assert_eq!(still.iteration, 1);
    assert_eq!(still.previous_heights, Some(vec![1.0]));
    let moved = pgd_step(&state, &[1e5], &cfg, &[10.0], &t);
    assert!(moved.heights[0].abs() < 1e-12);
    let steep = targets(100.0, 10.0, 0.1, 0.0, 0.204);
    let up = pgd_step(&state, &[-1e7], &cfg, &[10.0], &steep);
    assert!((up.heights[0] / 10.0 - 0.204).abs() < 1e-15);
}

fn descent_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        learning_rate: 1e-2,
        max_iterations: 20_000,
        seed,
        ..OptimizerConfig::default()
    }
}

#[test]
fn single_segment_reaches_closed_form_slope() {
    let l = line(101, 1.0);
    let part = SegmentPartition::whole(&l, SegmentKind::Straight);
    let g = 0.08;
    let t = targets((100.0f64.powi(2) + 8.0f64.powi(2)).sqrt(), 8.0, g, 0.0, 0.2);
    let r = optimize(&l, &part, &t, &CostWeights::default(), &descent_config(3)).unwrap();
    let slope = r.final_state.heights[0] / 100.0;
    assert!((slope - g).abs() < 1e-3, "slope {slope}");
    assert_eq!(r.cost_history.len(), r.iterations + 1);
}

#[test]
fn infeasible_targets_saturate_at_max_slope() {
    let (l, part) = two_segment_line();
    let t = targets(25.0, 10.0, 0.2, 0.0, 0.2);
    let r = optimize(&l, &part, &t, &CostWeights::default(), &descent_config(1)).unwrap();
    for g in slopes_from_heights(&r.final_state.heights, part.planar_lengths()).unwrap() {
        assert!((g - 0.2).abs() < 1e-12, "slope {g}");
    }
    assert!(r.converged);
    let hist = &r.cost_history;
    assert!((hist[hist.len() - 1] - hist[hist.len() - 2]).abs() < 1e-3);
}

#[test]
fn optimize_is_deterministic() {
    let (l, part) = wavy();
    let t = targets(85.0, 9.0, 0.11, 0.0, 0.25);
    let cfg = descent_config(9);
    let a = optimize(&l, &part, &t, &CostWeights::default(), &cfg).unwrap();
    let b = optimize(&l, &part, &t, &CostWeights::default(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn max_iterations_stops_unconverged() {
    let (l, part) = wavy();
    let t = targets(85.0, 9.0, 0.11, 0.0, 0.25);
    let cfg = OptimizerConfig {
        max_iterations: 3,
        convergence_threshold: 1e-12,
        ..descent_config(2)
    };
    let r = optimize(&l, &part, &t, &CostWeights::default(), &cfg).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 3);
    assert_eq!(r.cost_history.len(), 4);
}

#[test]
fn final_cost_matches_reported_centerline() {
    let (l, part) = wavy();
    let t = targets(85.0, 9.0, 0.11, 0.0, 0.25);
    let w = CostWeights::default();
    let r = optimize(&l, &part, &t, &w, &descent_config(4)).unwrap();
    let k2d = curvature_2d(&l).unwrap();
    let full = cost(&r.centerline, &part, &k2d, &t, &w).unwrap();
    assert!((full.total - r.final_cost.total).abs() < 1e-9);
    assert!((r.cost_history.last().unwrap() - full.total).abs() < 1e-9);
}

/// Planar line whose length is `1/0.9` times shorter than the targets imply.
fn shrunk_track(factor: f64) -> (Polyline2D, SegmentPartition, TrackTargets) {
    let l = crate::geometry::scale_xy(&arc(60.0, 1.2, 1.0), factor).unwrap();
    let part = SegmentPartition::whole(&l, SegmentKind::Curved);
    let d = l.total_length() / factor;
    let h = 0.1 * d;
    (l, part, targets((d * d + h * h).sqrt(), h, 0.1, 0.0, 0.2))
}

fn scale_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        max_iterations: 5_000,
        ..descent_config(seed)
    }
}

#[test]
fn scale_at_true_size_stays_near_one() {
    let (l, part, t) = shrunk_track(1.0);
    let r = optimize_with_scale(
        &l,
        &part,
        &t,
        &CostWeights::default(),
        &scale_config(5),
        1.0,
    )
    .unwrap();
    let f = r.recovered_scale.unwrap();
    assert!((f - 1.0).abs() < 0.1, "f = {f}");
    assert!(!r.scale_clamped);
}

#[test]
fn scale_recovers_shrink_factor() {
    let (l, part, t) = shrunk_track(0.9);
    let r = optimize_with_scale(
        &l,
        &part,
        &t,
        &CostWeights::default(),
        &scale_config(6),
        1.0,
    )
    .unwrap();
    let f = r.recovered_scale.unwrap();
    assert!((f - 1.0 / 0.9).abs() < 0.08 / 0.9, "f = {f}");
    let d: f64 = r.partition.planar_lengths().iter().sum();
    assert!((d - l.total_length() * f).abs() < 1e-6);
}

#[test]
fn scale_recovery_is_consistent_under_rescaling() {
    let (l, part, t) = shrunk_track(0.9);
    let half = crate::geometry::scale_xy(&l, 0.5).unwrap();
    let half_part = part.remeasured(&half);
    let w = CostWeights::default();
    let f1 = optimize_with_scale(&l, &part, &t, &w, &scale_config(7), 1.0)
        .unwrap()
        .recovered_scale
        .unwrap();
    let f2 = optimize_with_scale(&half, &half_part, &t, &w, &scale_config(7), 1.0)
        .unwrap()
        .recovered_scale
        .unwrap();
    assert!((f2 / f1 - 2.0).abs() < 0.3, "f1 = {f1}, f2 = {f2}");
}

#[test]
fn scale_rejects_non_positive_start() {
    let (l, part, t) = shrunk_track(1.0);
    let cfg = scale_config(1);
    assert!(optimize_with_scale(&l, &part, &t, &CostWeights::default(), &cfg, 0.0).is_err());
}

#[test]
fn scale_driven_negative_is_clamped() {
    let (l, part, t) = shrunk_track(1.0);
    let cfg = OptimizerConfig {
        scale_learning_rate: 1.0,
        max_iterations: 20,
        ..scale_config(1)
    };
    let r = optimize_with_scale(&l, &part, &t, &CostWeights::default(), &cfg, 1.0).unwrap();
    assert!(r.scale_clamped);
    assert!(r.recovered_scale.unwrap() >= MIN_SCALE);
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_feasible(
        raw in prop::collection::vec(-50.0f64..50.0, 1..8),
        lengths in prop::collection::vec(1.0f64..100.0, 8),
        lo in -0.1f64..0.1,
        width in 0.01f64..0.3,
    ) {
        let d = &lengths[..raw.len()];
        let t = targets(100.0, 10.0, lo + width / 2.0, lo, lo + width);
        let once = project_heights(&raw, d, &t);
        prop_assert_eq!(&project_heights(&once, d, &t), &once);
        for (h, len) in once.iter().zip(d) {
            let g = h / len;
            prop_assert!(g >= t.slope_min - 1e-12 && g <= t.slope_max + 1e-12);
        }
    }

    #[test]
    fn reconstruction_drop_equals_height_sum(
        heights in prop::collection::vec(0.0f64..5.0, 4),
        start in 1.0f64..50.0,
    ) {
        let (l, part) = wavy();
        let line3d = reconstruct_elevation(&l, &part, &heights, start).unwrap();
        let z = line3d.z();
        let drop = z[0] - z[z.len() - 1];
        let sum: f64 = heights.iter().sum();
        prop_assert!((drop - sum).abs() <= 1e-6 * sum.max(1.0));
        prop_assert!(z.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(total_length_3d(&line3d) >= l.total_length() - 1e-9);
    }

    #[test]
    fn cost_terms_are_non_negative(
        heights in prop::collection::vec(-3.0f64..5.0, 4),
        l_target in 50.0f64..120.0,
    ) {
        let (l, part) = wavy();
        let t = targets(l_target, 8.0, 0.1, -0.1, 0.2);
        let line3d = reconstruct_elevation(&l, &part, &heights, 8.0).unwrap();
        let k2d = curvature_2d(&l).unwrap();
        let j = cost(&line3d, &part, &k2d, &t, &CostWeights::default()).unwrap();
        prop_assert!(j.length_term >= 0.0 && j.height_term >= 0.0);
        prop_assert!(j.curvature_term >= 0.0 && j.slope_term >= 0.0);
        let sum = j.length_term + j.height_term + j.curvature_term + j.slope_term;
        prop_assert!((j.total - sum).abs() < 1e-12);
    }

    #[test]
    fn every_iterate_respects_slope_bounds(seed in 0u64..1000) {
        let (l, part) = wavy();
        let t = targets(85.0, 9.0, 0.11, 0.02, 0.2);
        let cfg = OptimizerConfig { max_iterations: 200, ..descent_config(seed) };
        let r = optimize(&l, &part, &t, &CostWeights::default(), &cfg).unwrap();
        for g in segment_slopes(&r.centerline, &part) {
            prop_assert!(g >= t.slope_min - 1e-9 && g <= t.slope_max + 1e-9);
        }
    }
}
