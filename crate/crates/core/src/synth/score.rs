use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::{GroundTruth, TruthKind};
use super::SynthError;
use crate::conversation::{Label, Utterance};
use crate::gaze_events::{EventKind, EventRecord, EyeMovementEvent};
use crate::ingest::jsonl;
use crate::metrics_report::{LeadershipReport, TransitionMatrix};
use crate::object_fixation::FixationAssignment;
use crate::pipeline::Analysis;
use crate::{ms_to_ns, Nanos};

/// The parts of a finished analysis that get scored.
#[derive(Debug, Clone, Default)]
pub struct ScoreInputs {
    pub session_id: String,
    pub events: BTreeMap<String, Vec<EyeMovementEvent>>,
    pub assignments: BTreeMap<String, Vec<FixationAssignment>>,
    pub ec_per_dyad: Option<BTreeMap<String, usize>>,
    pub transition: Option<TransitionMatrix>,
    pub utterances: Option<Vec<Utterance>>,
}

impl ScoreInputs {
    pub fn from_analysis(a: &Analysis) -> Self {
        Self {
            session_id: a.report.session_id.clone(),
            events: a.timelines.iter().map(|(k, t)| (k.clone(), t.events.clone())).collect(),
            assignments: a.assignments.clone(),
            ec_per_dyad: a.report.eye_contact.as_ref().map(|e| e.ec_per_dyad.clone()),
            transition: a.report.fixation.as_ref().map(|f| f.transition.clone()),
            utterances: a.utterances.clone(),
        }
    }

    /// Read an analysis output directory, looking for each wearer in `truth`.
    pub fn from_dir(dir: &Path, truth: &GroundTruth) -> Result<Self, SynthError> {
        let io = |p: &Path, e: String| SynthError::Io(format!("{}: {e}", p.display()));
        let report_path = dir.join("report.json");
        let text = std::fs::read_to_string(&report_path).map_err(|e| io(&report_path, e.to_string()))?;
        let report = LeadershipReport::from_json_str(&text).map_err(|e| io(&report_path, e.to_string()))?;
        fn read<T: serde::de::DeserializeOwned>(p: &Path) -> Result<Option<Vec<T>>, SynthError> {
            if !p.exists() {
                return Ok(None);
            }
            let lines = jsonl::read_lines(p).map_err(|e| SynthError::Io(e.to_string()))?;
            lines
                .into_iter()
                .map(|(n, l)| jsonl::parse_record(p, n, &l).map_err(|e| SynthError::Io(e.to_string())))
                .collect::<Result<Vec<T>, _>>()
                .map(Some)
        }
        let mut events = BTreeMap::new();
        let mut assignments = BTreeMap::new();
        for id in truth.events.keys() {
            if let Some(recs) = read::<EventRecord>(&dir.join(format!("events_{id}.jsonl")))? {
                events.insert(id.clone(), recs.iter().map(EyeMovementEvent::from).collect());
            }
            if let Some(a) = read::<FixationAssignment>(&dir.join(format!("assignments_{id}.jsonl")))? {
                assignments.insert(id.clone(), a);
            }
        }
        Ok(Self {
            session_id: report.session_id.clone(),
            events,
            assignments,
            ec_per_dyad: report.eye_contact.as_ref().map(|e| e.ec_per_dyad.clone()),
            transition: report.fixation.as_ref().map(|f| f.transition.clone()),
            utterances: read::<Utterance>(&dir.join("utterances.jsonl"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub session_id: String,
    pub boundary_tolerance_ms: f64,
    /// Planted fixations and saccades matched by a detected event of the same
    /// kind with both boundaries within tolerance, over all planted ones.
    pub boundary_agreement: f64,
    pub planted_events: usize,
    pub matched_events: usize,
    pub boundary_per_wearer: BTreeMap<String, f64>,
    /// Planted fixations whose most-overlapping detected fixation got the
    /// planted object id.
    pub object_accuracy: Option<f64>,
    pub ec_count_delta: Option<i64>,
    pub ec_per_dyad_delta: BTreeMap<String, i64>,
    pub transition_equal: Option<bool>,
    pub conversation_accuracy: Option<f64>,
}

fn overlap(a: (Nanos, Nanos), b: (Nanos, Nanos)) -> Nanos {
    (a.1.min(b.1) - a.0.max(b.0)).max(0)
}

pub fn score_against_truth(inputs: &ScoreInputs, truth: &GroundTruth, boundary_tol_ms: f64) -> Result<Scores, SynthError> {
    if inputs.session_id != truth.session_id {
        return Err(SynthError::SessionMismatch { expected: truth.session_id.clone(), found: inputs.session_id.clone() });
    }
    let tol = ms_to_ns(boundary_tol_ms);
    let empty = Vec::new();
    let (mut planted, mut matched) = (0usize, 0usize);
    let mut per_wearer = BTreeMap::new();
    let (mut obj_total, mut obj_ok) = (0usize, 0usize);
    for (id, truth_events) in &truth.events {
        let detected = inputs.events.get(id).unwrap_or(&empty);
        let (mut p, mut m) = (0usize, 0usize);
        for t in truth_events {
            let kind = match t.kind {
                TruthKind::Fixation => EventKind::Fixation,
                TruthKind::Saccade => EventKind::Saccade,
                TruthKind::Gap => continue,
            };
            p += 1;
            if detected
                .iter()
                .any(|d| d.kind == kind && (d.start_ns - t.start_ns).abs() <= tol && (d.end_ns - t.end_ns).abs() <= tol)
            {
                m += 1;
            }
        }
        planted += p;
        matched += m;
        per_wearer.insert(id.clone(), if p == 0 { 1.0 } else { m as f64 / p as f64 });

        if let Some(assigned) = inputs.assignments.get(id) {
            for t in truth_events.iter().filter(|t| t.kind == TruthKind::Fixation) {
                obj_total += 1;
                let best = assigned
                    .iter()
                    .map(|a| (overlap((a.start_ns, a.end_ns), (t.start_ns, t.end_ns)), a))
                    .filter(|(o, _)| *o > 0)
                    .max_by_key(|(o, a)| (*o, std::cmp::Reverse(a.fix_idx)));
                if best.is_some_and(|(_, a)| Some(a.object_id) == t.object_id) {
                    obj_ok += 1;
                }
            }
        }
    }

    let (ec_count_delta, ec_per_dyad_delta) = match &inputs.ec_per_dyad {
        Some(found) => {
            let mut per = BTreeMap::new();
            for (m, &want) in &truth.ec_per_dyad {
                per.insert(m.clone(), found.get(m).copied().unwrap_or(0) as i64 - want as i64);
            }
            (Some(found.values().sum::<usize>() as i64 - truth.ec_total as i64), per)
        }
        None => (None, BTreeMap::new()),
    };

    let conversation_accuracy = inputs.utterances.as_ref().map(|found| {
        let mut ok = 0;
        for t in &truth.utterances {
            let got = found
                .iter()
                .find(|u| u.start_ns == t.start_ns && u.speaker == t.speaker)
                .map(|u| u.label.unwrap_or(Label::NONE));
            if got == t.label {
                ok += 1;
            }
        }
        if truth.utterances.is_empty() {
            1.0
        } else {
            ok as f64 / truth.utterances.len() as f64
        }
    });

    Ok(Scores {
        session_id: truth.session_id.clone(),
        boundary_tolerance_ms: boundary_tol_ms,
        boundary_agreement: if planted == 0 { 1.0 } else { matched as f64 / planted as f64 },
        planted_events: planted,
        matched_events: matched,
        boundary_per_wearer: per_wearer,
        object_accuracy: (obj_total > 0).then(|| obj_ok as f64 / obj_total as f64),
        ec_count_delta,
        ec_per_dyad_delta,
        transition_equal: inputs.transition.as_ref().map(|m| m == &truth.leader_transition),
        conversation_accuracy,
    })
}
