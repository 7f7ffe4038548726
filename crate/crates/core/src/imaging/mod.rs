//! Vision primitives for screen-capture frames: grayscale conversion,
//! Gaussian smoothing, Canny edges, binary dilation, border following and
//! contour shape metrics.
//!
//! Everything operates on float rasters in `[0, 1]` and is deterministic:
//! no global state, no hidden RNG, identical inputs give identical outputs.

mod canny;
mod contour;
mod metrics;
mod morph;
mod raster;

pub use canny::canny;
pub use contour::{fill_contour, trace_contours, Contour, ContourKind};
pub use metrics::{
    classify_shape, classify_shape_with, contour_metrics, ContourMetrics, Orientation, Shape,
    ShapeThresholds,
};
pub use morph::{dilate, BitMask};
pub use raster::{gaussian_blur, to_grayscale, Raster};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("raster dimensions must be nonzero")]
    EmptyRaster,
    #[error("unsupported channel count {0}; expected 1 or 3")]
    BadChannelCount(u8),
    #[error("pixel buffer length mismatch: expected {expected}, got {got}")]
    DataLength { expected: usize, got: usize },
    #[error("pixel samples must lie in [0, 1]")]
    SampleOutOfRange,
    #[error("gaussian sigma {0} outside (0, 10]")]
    BadSigma(f64),
    #[error("canny thresholds low={low} high={high} must satisfy 0 <= low < high <= 1")]
    BadCannyThresholds { low: f64, high: f64 },
    #[error("canny input must be single-channel")]
    NotGrayscale,
    #[error("dilation radius {0} outside 1..=10")]
    BadDilationRadius(u32),
    #[error("contour has no points")]
    EmptyContour,
}
