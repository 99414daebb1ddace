use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::{jsonl, IngestError};
use crate::{BBox, Nanos};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceBox {
    pub person_id: String,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    #[serde(default = "one")]
    pub conf: f64,
}

fn one() -> f64 {
    1.0
}

impl FaceBox {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x0, self.y0, self.x1, self.y1)
    }
}

/// Identified face boxes in one frame of one wearer's video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceFrame {
    pub frame_idx: u64,
    pub t_ns: Nanos,
    pub boxes: Vec<FaceBox>,
}

impl FaceFrame {
    pub fn face_of(&self, person_id: &str) -> Option<BBox> {
        self.boxes.iter().find(|b| b.person_id == person_id).map(FaceBox::bbox)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceTrackSet {
    /// Whose video the detections come from.
    pub video_owner: String,
    pub frames: Vec<FaceFrame>,
}

impl FaceTrackSet {
    pub fn frame_clock(&self) -> Vec<(u64, Nanos)> {
        self.frames.iter().map(|f| (f.frame_idx, f.t_ns)).collect()
    }

    /// JSON Lines form with timestamps moved back to device time.
    pub fn to_jsonl(&self, clock_offset_ns: Nanos) -> String {
        let shifted: Vec<FaceFrame> = self
            .frames
            .iter()
            .map(|f| FaceFrame { t_ns: f.t_ns - clock_offset_ns, ..f.clone() })
            .collect();
        jsonl::to_string(&shifted)
    }
}

/// Parse a face-track file, pushing every violation into `sink`.
pub fn parse_face_tracks(
    path: &Path,
    video_owner: &str,
    clock_offset_ns: Nanos,
    sink: &mut Vec<IngestError>,
) -> Option<FaceTrackSet> {
    let before = sink.len();
    let lines = match jsonl::read_lines(path) {
        Ok(l) => l,
        Err(e) => {
            sink.push(e);
            return None;
        }
    };
    if lines.is_empty() {
        sink.push(IngestError::EmptyStream { path: path.to_path_buf() });
        return None;
    }
    let mut frames: Vec<FaceFrame> = Vec::with_capacity(lines.len());
    let mut last: Option<(Nanos, u64)> = None;
    for (line, text) in lines {
        let mut frame: FaceFrame = match jsonl::parse_record(path, line, &text) {
            Ok(f) => f,
            Err(e) => {
                sink.push(e);
                continue;
            }
        };
        let Some(t) = frame.t_ns.checked_add(clock_offset_ns) else {
            sink.push(IngestError::BadRecord {
                path: path.to_path_buf(),
                line,
                reason: "timestamp overflows after clock offset".into(),
            });
            continue;
        };
        frame.t_ns = t;
        if let Some((pt, pidx)) = last {
            if frame.t_ns <= pt || frame.frame_idx <= pidx {
                sink.push(IngestError::NonMonotonicTimestamps { path: path.to_path_buf(), line });
            }
        }
        last = Some((frame.t_ns, frame.frame_idx));
        for (i, b) in frame.boxes.iter().enumerate() {
            if !b.bbox().is_valid() {
                sink.push(IngestError::DegenerateBox { path: path.to_path_buf(), line });
            }
            if frame.boxes[..i].iter().any(|o| o.person_id == b.person_id) {
                sink.push(IngestError::DuplicateFace {
                    path: path.to_path_buf(),
                    line,
                    person_id: b.person_id.clone(),
                });
            }
        }
        frames.push(frame);
    }
    (sink.len() == before).then(|| FaceTrackSet { video_owner: video_owner.to_string(), frames })
}

pub fn load_face_tracks(path: &Path, video_owner: &str, clock_offset_ns: Nanos) -> Result<FaceTrackSet, IngestError> {
    let mut sink = Vec::new();
    parse_face_tracks(path, video_owner, clock_offset_ns, &mut sink).ok_or_else(|| sink.swap_remove(0))
}
