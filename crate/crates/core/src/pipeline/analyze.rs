use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{ConversationClassifier, PipelineError, RunConfig, Session};
use crate::conversation::{self, CategoryRatios, Utterance};
use crate::eye_contact::{self, EyeContactSummary, WearerView};
use crate::gaze_events::{classify_events, EventTimeline};
use crate::ingest::{jsonl, FramedGaze};
use crate::metrics_report::{assemble_report, LeadershipReport, ReportInputs};
use crate::object_fixation::{assign_all, AssignContext, FixationAssignment};

/// In-memory results of one run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub timelines: BTreeMap<String, EventTimeline>,
    pub assignments: BTreeMap<String, Vec<FixationAssignment>>,
    pub eye_contact: Option<EyeContactSummary>,
    pub utterances: Option<Vec<Utterance>>,
    pub ratios: Option<CategoryRatios>,
    pub report: LeadershipReport,
}

fn classify_utterances(session: &Session, cfg: &RunConfig) -> Result<Option<Vec<Utterance>>, PipelineError> {
    let Some(utts) = &session.utterances else { return Ok(None) };
    let keep = cfg.conversation.keep_annotations;
    let todo: Vec<usize> = (0..utts.len()).filter(|&i| !(keep && utts[i].label.is_some())).collect();
    let pending: Vec<Utterance> = todo.iter().map(|&i| utts[i].clone()).collect();
    let labeled = match cfg.conversation.classifier {
        ConversationClassifier::Rule => {
            let rules = cfg.rule_set()?;
            pending.iter().map(|u| conversation::classify_rule(u, &rules)).collect()
        }
        ConversationClassifier::External => {
            let adapter_cfg = cfg
                .conversation
                .adapter
                .as_ref()
                .ok_or_else(|| PipelineError::Config("external classifier selected without an adapter".into()))?;
            conversation::classify_external(&pending, adapter_cfg.build().as_mut())?
        }
    };
    let mut out = utts.clone();
    for (i, u) in todo.into_iter().zip(labeled) {
        out[i] = u;
    }
    Ok(Some(out))
}

/// Run every subsystem whose inputs are present. A subsystem that cannot run
/// leaves a null report section and a note under `missing`.
pub fn analyze(session: &Session, cfg: &RunConfig) -> Result<Analysis, PipelineError> {
    let leader_id = session.manifest.leader_id.clone();
    let tol = cfg.align_tolerance_ns();
    let mut missing: BTreeMap<String, String> = BTreeMap::new();

    let mut timelines = BTreeMap::new();
    for w in &session.wearers {
        let params = cfg.classifier_for(&w.entry.stream);
        params.validate()?;
        match classify_events(&w.gaze, &params) {
            Ok(t) => {
                timelines.insert(w.entry.wearer_id.clone(), t);
            }
            Err(e) => {
                log::warn!("event classification failed for `{}`: {e}", w.entry.wearer_id);
                if w.entry.wearer_id == leader_id {
                    missing.insert("fixation".into(), format!("leader gaze unusable: {e}"));
                }
            }
        }
    }

    let mut assignments = BTreeMap::new();
    for w in &session.wearers {
        let (Some(labels), Some(timeline)) = (&w.labels, timelines.get(&w.entry.wearer_id)) else { continue };
        let framed = FramedGaze::new(&w.gaze, &labels.frame_clock(), tol);
        let ctx = AssignContext {
            labels,
            framed_gaze: &framed,
            category_map: &session.manifest.category_map,
            priority: &cfg.category_priority,
        };
        assignments.insert(w.entry.wearer_id.clone(), assign_all(timeline, &ctx));
    }
    if !assignments.contains_key(&leader_id) {
        missing.entry("fixation".into()).or_insert_with(|| "leader has no label maps".into());
    }

    let eye_contact = if cfg.eye_contact.enabled {
        let framed: BTreeMap<&str, FramedGaze> = session
            .wearers
            .iter()
            .filter_map(|w| {
                let faces = w.faces.as_ref()?;
                Some((w.entry.wearer_id.as_str(), FramedGaze::new(&w.gaze, &faces.frame_clock(), tol)))
            })
            .collect();
        let view = |id: &str| {
            let w = session.wearer(id)?;
            Some(WearerView { wearer_id: &w.entry.wearer_id, faces: w.faces.as_ref()?, gaze: framed.get(id)? })
        };
        let members: Vec<(String, Option<WearerView<'_>>)> = session
            .manifest
            .members()
            .map(|m| (m.wearer_id.clone(), view(&m.wearer_id)))
            .collect();
        match eye_contact::count_eye_contact(&leader_id, view(&leader_id), &members, &cfg.eye_contact) {
            Ok(s) => Some(s),
            Err(e) => {
                missing.insert("eye_contact".into(), e.to_string());
                None
            }
        }
    } else {
        missing.insert("eye_contact".into(), "disabled".into());
        None
    };

    let (utterances, ratios) = if cfg.conversation.enabled {
        match classify_utterances(session, cfg)? {
            Some(u) => match conversation::category_ratios(&u, &leader_id) {
                Ok(r) => (Some(u), Some(r)),
                Err(e) => {
                    missing.insert("conversation".into(), e.to_string());
                    (Some(u), None)
                }
            },
            None => {
                missing.insert("conversation".into(), "no transcript".into());
                (None, None)
            }
        }
    } else {
        missing.insert("conversation".into(), "disabled".into());
        (None, None)
    };

    let report = assemble_report(ReportInputs {
        session_id: &session.manifest.session_id,
        leader_id: &leader_id,
        assignments: assignments.get(&leader_id).map(Vec::as_slice),
        transition: cfg.transition,
        eye_contact: eye_contact.as_ref(),
        conversation: ratios.as_ref(),
        missing,
        human_scores: session.manifest.human_scores.clone(),
        params: serde_json::to_value(cfg).expect("config serializes"),
    })?;
    Ok(Analysis { timelines, assignments, eye_contact, utterances, ratios, report })
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct OutputFiles {
    pub files: Vec<PathBuf>,
}

/// Write the report (JSON, Markdown, transition CSV) and every subsystem
/// export into `out_dir`.
pub fn write_outputs(analysis: &Analysis, out_dir: &Path) -> Result<OutputFiles, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let mut written = OutputFiles::default();
    let mut put = |name: String, text: String| -> Result<(), PipelineError> {
        let p = out_dir.join(name);
        std::fs::write(&p, text).map_err(|e| PipelineError::io(&p, e))?;
        written.files.push(p);
        Ok(())
    };
    put("report.json".into(), analysis.report.to_json_string())?;
    put("report.md".into(), analysis.report.to_markdown())?;
    if let Some(csv) = analysis.report.transition_csv() {
        put("transition.csv".into(), csv)?;
    }
    for (id, t) in &analysis.timelines {
        put(format!("events_{id}.jsonl"), jsonl::to_string(&t.to_records()))?;
        let sidecar = crate::gaze_events::TimelineSidecar {
            wearer_id: id.clone(),
            threshold: t.threshold,
            params: t.params_used.clone(),
        };
        put(format!("events_{id}.params.json"), serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n")?;
    }
    for (id, a) in &analysis.assignments {
        put(format!("assignments_{id}.jsonl"), jsonl::to_string(a))?;
    }
    if let Some(ec) = &analysis.eye_contact {
        put("eye_contact.jsonl".into(), jsonl::to_string(&ec.events))?;
    }
    if let Some(u) = &analysis.utterances {
        put("utterances.jsonl".into(), jsonl::to_string(u))?;
    }
    Ok(written)
}

/// [`analyze`] then [`write_outputs`]. `run_metadata`, when given, is stored
/// in the report; leave it unset for byte-reproducible output.
pub fn analyze_to_dir(
    session: &Session,
    cfg: &RunConfig,
    out_dir: &Path,
    run_metadata: Option<serde_json::Value>,
) -> Result<Analysis, PipelineError> {
    let mut analysis = analyze(session, cfg)?;
    analysis.report.run_metadata = run_metadata;
    write_outputs(&analysis, out_dir)?;
    Ok(analysis)
}
