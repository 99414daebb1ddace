use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, RunConfig, Session};
use crate::conversation::{Label, Utterance};
use crate::eye_contact::EyeContactEvent;
use crate::gaze_events::{EventRecord, EventTimeline, EyeMovementEvent};
use crate::ingest::{jsonl, FramedGaze};
use crate::object_fixation::FixationAssignment;
use crate::{Category, Nanos};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeXY {
    pub x: f64,
    pub y: f64,
}

/// Everything a renderer needs to draw one frame's annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRecord {
    pub frame_idx: u64,
    pub t_ns: Nanos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaze: Option<GazeXY>,
    pub kind: Option<String>,
    pub category: Option<Category>,
    pub object_id: Option<u32>,
    pub ec: bool,
    pub utterance_label: Option<Label>,
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let lines = jsonl::read_lines(path)?;
    Ok(lines
        .into_iter()
        .map(|(line, text)| jsonl::parse_record(path, line, &text))
        .collect::<Result<_, _>>()?)
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<Vec<T>>, PipelineError> {
    if path.exists() {
        read_records(path).map(Some)
    } else {
        Ok(None)
    }
}

/// Build per-frame overlay tracks from a finished analysis in `analysis_dir`
/// and write `overlay_<wearer>.jsonl` into `out_dir`. Frames come from the
/// wearer's label maps, else its face tracks; wearers with neither are skipped.
pub fn export_overlay(
    session: &Session,
    cfg: &RunConfig,
    analysis_dir: &Path,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let report = analysis_dir.join("report.json");
    if !report.exists() {
        return Err(PipelineError::MissingAnalysis(report));
    }
    let ec_events: Vec<EyeContactEvent> = read_optional(&analysis_dir.join("eye_contact.jsonl"))?.unwrap_or_default();
    let utterances: Vec<Utterance> = read_optional(&analysis_dir.join("utterances.jsonl"))?.unwrap_or_default();
    let leader_id = &session.manifest.leader_id;
    let leader_utts: Vec<&Utterance> = utterances.iter().filter(|u| &u.speaker == leader_id).collect();
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;

    let mut written = Vec::new();
    for w in &session.wearers {
        let id = &w.entry.wearer_id;
        let clock = match (&w.labels, &w.faces) {
            (Some(l), _) => l.frame_clock(),
            (None, Some(f)) => f.frame_clock(),
            (None, None) => {
                log::warn!("wearer `{id}` has no video frame clock; no overlay written");
                continue;
            }
        };
        let events_path = analysis_dir.join(format!("events_{id}.jsonl"));
        if !events_path.exists() {
            return Err(PipelineError::MissingAnalysis(events_path));
        }
        let events: Vec<EventRecord> = read_records(&events_path)?;
        let timeline = EventTimeline {
            wearer_id: id.clone(),
            events: events.iter().map(EyeMovementEvent::from).collect(),
            params_used: cfg.classifier_for(&w.entry.stream),
            threshold: 0.0,
        };
        let assignments: Vec<FixationAssignment> =
            read_optional(&analysis_dir.join(format!("assignments_{id}.jsonl")))?.unwrap_or_default();
        let framed = FramedGaze::new(&w.gaze, &clock, cfg.align_tolerance_ns());

        let records: Vec<OverlayRecord> = framed
            .frames
            .iter()
            .map(|f| {
                let ev = timeline.event_at(f.t_ns);
                let assignment = ev.and_then(|e| {
                    assignments.iter().find(|a| a.start_ns == e.start_ns && a.end_ns == e.end_ns)
                });
                let ec = ec_events
                    .iter()
                    .any(|e| (&e.leader == id || &e.member == id) && e.start_ns <= f.t_ns && f.t_ns <= e.end_ns);
                let utterance_label = leader_utts
                    .iter()
                    .find(|u| u.start_ns <= f.t_ns && f.t_ns <= u.end_ns)
                    .and_then(|u| u.label);
                OverlayRecord {
                    frame_idx: f.frame_idx,
                    t_ns: f.t_ns,
                    gaze: f.gaze.map(|p| GazeXY { x: p.x, y: p.y }),
                    kind: ev.map(|e| e.kind.as_str().to_string()),
                    category: assignment.map(|a| a.category),
                    object_id: assignment.map(|a| a.object_id),
                    ec,
                    utterance_label,
                }
            })
            .collect();
        let path = out_dir.join(format!("overlay_{id}.jsonl"));
        jsonl::write_file(&path, &records).map_err(|e| PipelineError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
