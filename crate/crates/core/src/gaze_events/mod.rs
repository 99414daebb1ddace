//! Eye-movement event classification: fixation (1), saccade (2), other (0).
//!
//! The classifier is a velocity-threshold segmenter. Speeds are measured on the
//! intervals between consecutive valid samples, each interval is labelled slow
//! (fixation candidate), fast (saccade candidate) or unmeasurable (other), and
//! maximal runs of equally labelled intervals become events. Consecutive events
//! share their boundary sample; an event covers the half-open span
//! `[start_ns, end_ns)` except the last, which is closed.

mod classify;
mod params;

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use classify::{classify_events, compute_velocity, interval_speeds, smooth_gaze};
pub use params::{ClassifierParams, ThresholdMode};

use crate::{Nanos, Point};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("need at least {needed} valid samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("every gaze sample is invalid")]
    AllInvalid,
    #[error("invalid classifier parameters: {0}")]
    BadParams(String),
}

impl ClassifyError {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifyError::TooFewSamples { .. } => "TooFewSamples",
            ClassifyError::AllInvalid => "AllInvalid",
            ClassifyError::BadParams(_) => "BadParams",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Other = 0,
    Fixation = 1,
    Saccade = 2,
}

impl EventKind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EventKind::Other),
            1 => Some(EventKind::Fixation),
            2 => Some(EventKind::Saccade),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Other => "other",
            EventKind::Fixation => "fixation",
            EventKind::Saccade => "saccade",
        }
    }
}

impl Serialize for EventKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for EventKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        EventKind::from_code(code).ok_or_else(|| serde::de::Error::custom(format!("event kind {code} not in 0..=2")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EyeMovementEvent {
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub kind: EventKind,
    /// Highest interval speed inside the event (px/s or deg/s).
    pub peak_velocity: f64,
    /// Mean of the valid (smoothed) positions; absent when none are valid.
    pub mean_position: Option<Point>,
}

impl EyeMovementEvent {
    pub fn duration_ns(&self) -> Nanos {
        self.end_ns - self.start_ns
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTimeline {
    pub wearer_id: String,
    pub events: Vec<EyeMovementEvent>,
    pub params_used: ClassifierParams,
    /// Effective velocity threshold after adaptation and flooring.
    pub threshold: f64,
}

impl EventTimeline {
    /// The event whose span contains `t_ns`.
    pub fn event_at(&self, t_ns: Nanos) -> Option<&EyeMovementEvent> {
        let idx = self.events.partition_point(|e| e.start_ns <= t_ns).checked_sub(1)?;
        let e = &self.events[idx];
        let last = idx + 1 == self.events.len();
        (t_ns < e.end_ns || (last && t_ns == e.end_ns)).then_some(e)
    }

    pub fn to_records(&self) -> Vec<EventRecord> {
        self.events.iter().map(EventRecord::from).collect()
    }

    /// Timeline export (JSON Lines) plus its parameter sidecar.
    pub fn write_files(&self, events_path: &Path, sidecar_path: &Path) -> std::io::Result<()> {
        crate::ingest::jsonl::write_file(events_path, &self.to_records())?;
        let sidecar = TimelineSidecar {
            wearer_id: self.wearer_id.clone(),
            threshold: self.threshold,
            params: self.params_used.clone(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        text.push('\n');
        std::fs::write(sidecar_path, text)
    }
}

/// Only fixations, in temporal order.
pub fn fixations_of(timeline: &EventTimeline) -> Vec<EyeMovementEvent> {
    timeline.events.iter().filter(|e| e.kind == EventKind::Fixation).cloned().collect()
}

/// One line of the event export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub kind: EventKind,
    pub peak_velocity: f64,
    pub mean_x: Option<f64>,
    pub mean_y: Option<f64>,
}

impl From<&EyeMovementEvent> for EventRecord {
    fn from(e: &EyeMovementEvent) -> Self {
        Self {
            start_ns: e.start_ns,
            end_ns: e.end_ns,
            kind: e.kind,
            peak_velocity: e.peak_velocity,
            mean_x: e.mean_position.map(|p| p.x),
            mean_y: e.mean_position.map(|p| p.y),
        }
    }
}

impl From<&EventRecord> for EyeMovementEvent {
    fn from(r: &EventRecord) -> Self {
        Self {
            start_ns: r.start_ns,
            end_ns: r.end_ns,
            kind: r.kind,
            peak_velocity: r.peak_velocity,
            mean_position: r.mean_x.zip(r.mean_y).map(|(x, y)| Point::new(x, y)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSidecar {
    pub wearer_id: String,
    pub threshold: f64,
    pub params: ClassifierParams,
}
