//! Raw planar centerline to optimized 3D centerline.

use crate::geometry::{curvature_2d, resample_uniform, CurvatureProfile, Point2D, Polyline2D};
use crate::io::SpecFile;
use crate::optimizer::{optimize, optimize_with_scale, OptimizerConfig, RunResult};
use crate::report::{geometry_report, GeometryReport};
use crate::segmentation::{
    adjust_partition_count, build_partition, classify_points, smooth_labels, SegmentKind,
    SegmentPartition,
};
use crate::Error;

/// A resampled centerline with its curvature and segment partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub line: Polyline2D,
    pub curvature: CurvatureProfile,
    pub partition: SegmentPartition,
}

/// Resamples, classifies, smooths and partitions a raw planar centerline,
/// then adjusts the segment count if the spec asks for one.
pub fn prepare(raw: &[Point2D], spec: &SpecFile) -> Result<Prepared, Error> {
    segment(resample_uniform(raw, spec.resample_spacing)?, spec)
}

/// Partitions an already uniformly sampled centerline.
pub fn segment(line: Polyline2D, spec: &SpecFile) -> Result<Prepared, Error> {
    let curvature = curvature_2d(&line)?;
    let labels = classify_points(&curvature, &spec.segmentation);
    let labels = absorb_isolated(smooth_labels(&labels, &curvature, &spec.segmentation));
    let mut partition = build_partition(&labels, &line)?;
    if let Some(count) = spec.segment_count {
        partition = adjust_partition_count(&partition, &line, count)?;
    }
    Ok(Prepared {
        line,
        curvature,
        partition,
    })
}

/// Relabels single-point runs with the label of the run before them (after
/// them for the first point), so every segment spans at least one step.
fn absorb_isolated(mut labels: Vec<SegmentKind>) -> Vec<SegmentKind> {
    let n = labels.len();
    let mut k = 0;
    while k < n {
        let end = (k..n).find(|&i| labels[i] != labels[k]).unwrap_or(n);
        if end - k == 1 && n > 1 {
            labels[k] = if k > 0 { labels[k - 1] } else { labels[1] };
        }
        k = end;
    }
    labels
}

/// One optimization run with the spec's settings and the given seed.
pub fn run_once(prepared: &Prepared, spec: &SpecFile, seed: u64) -> Result<RunResult, Error> {
    let config = OptimizerConfig {
        seed,
        ..spec.optimizer
    };
    let result = if spec.scaled {
        optimize_with_scale(
            &prepared.line,
            &prepared.partition,
            &spec.targets,
            &spec.weights,
            &config,
            spec.f_init,
        )?
    } else {
        optimize(
            &prepared.line,
            &prepared.partition,
            &spec.targets,
            &spec.weights,
            &config,
        )?
    };
    Ok(result)
}

/// Runs seeds `seed, seed + 1, …` concurrently; results keep seed order.
pub fn run_many(
    prepared: &Prepared,
    spec: &SpecFile,
    seed: u64,
    runs: usize,
) -> Vec<Result<RunResult, Error>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..runs as u64)
            .map(|k| scope.spawn(move || run_once(prepared, spec, seed + k)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("optimizer run panicked"))
            .collect()
    })
}

pub fn report_for(result: &RunResult, spec: &SpecFile) -> Result<GeometryReport, Error> {
    Ok(geometry_report(
        &result.centerline,
        &result.partition,
        &spec.targets,
    )?)
}
