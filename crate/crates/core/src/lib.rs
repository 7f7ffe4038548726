//! Mining toolkit for visual logs of GUI sessions.
//!
//! A visual log is a directory of lossless screen frames plus an optional
//! input-event stream. The crate covers the whole desk-scale pipeline:
//!
//! * [`imaging`] — raster primitives: blur, Canny edges, dilation, contours
//! * [`vislog`] — log loading, frame differencing, sampling, anonymization
//! * [`detection`] — GUI element extraction and spatial relations per frame
//! * [`tracking`] — frame-to-frame element matching and interaction inference
//! * [`mining`] — n-gram models over action tokens: patterns, anomalies,
//!   generation
//! * [`synthgui`] — deterministic synthetic screens and scripted logs with
//!   ground truth, used as fixtures and demo input
//!
//! All passes are pure library code; persistence and parallelism live in the
//! CLI front end.

pub mod detection;
pub mod geom;
pub mod imaging;
pub mod mining;
pub mod synthgui;
pub mod tracking;
pub mod vislog;

pub use geom::Rect;
