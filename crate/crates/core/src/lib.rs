//! Leadership-assessment analytics over multi-wearer egocentric recordings.
//!
//! The engine consumes derived streams (gaze samples, per-frame object label
//! maps, identified face boxes, transcripts) and produces fixation-object
//! timelines, mutual eye-contact events, fixation transition matrices and
//! conversation-category ratios for the session leader.
//!
//! Geometry and signal primitives are generic over the float type
//! ([`geometry`], [`signal`]); the pipeline itself runs in `f64` through the
//! aliases below.

pub mod category;
pub mod conversation;
pub mod eye_contact;
pub mod gaze_events;
pub mod geometry;
pub mod ingest;
pub mod metrics_report;
pub mod object_fixation;
pub mod pipeline;
pub mod signal;
pub mod synth;

/// Signed session-clock nanoseconds.
pub type Nanos = i64;

pub type Point = geometry::Point2<f64>;
pub type BBox = geometry::BBox<f64>;
pub type PointF32 = geometry::Point2<f32>;
pub type BBoxF32 = geometry::BBox<f32>;

pub use category::{Category, CategoryPriority};

pub fn ms_to_ns(ms: f64) -> Nanos {
    (ms * 1e6).round() as Nanos
}

pub fn ns_to_s(ns: Nanos) -> f64 {
    ns as f64 * 1e-9
}
