//! Bobsleigh track centerline generation.
//!
//! A planar centerline is split into straight and curved segments, then each
//! segment is given a height drop by projected gradient descent so the
//! resulting 3D line matches design targets for length, height and slope.

pub mod cli;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod pipeline;
pub mod report;
pub mod segmentation;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Segmentation(#[from] segmentation::SegmentationError),
    #[error(transparent)]
    Optimizer(#[from] optimizer::OptimizerError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}
