//! End-to-end session processing: load and validate every input named by a
//! manifest, run each subsystem, and write the report and exports.

mod analyze;
mod overlay;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use analyze::{analyze, analyze_to_dir, write_outputs, Analysis, OutputFiles};
pub use overlay::{export_overlay, OverlayRecord};

use crate::conversation::{self, AdapterConfig, ConversationError, Utterance};
use crate::eye_contact::{self, EyeContactError, EyeContactParams, FaceTrackSet};
use crate::gaze_events::{ClassifierParams, ClassifyError};
use crate::ingest::{self, GazeTrack, IngestError, ManifestFile, SessionManifest, StreamMeta, WearerEntry};
use crate::metrics_report::{MetricsError, TransitionOptions};
use crate::object_fixation::{check_box_priority, default_box_priority, parse_label_source, LabelContext, LabelSource};
use crate::{ms_to_ns, CategoryPriority, Nanos};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<IngestError>),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Conversation(#[from] ConversationError),
    #[error(transparent)]
    EyeContact(#[from] EyeContactError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("bad run configuration: {0}")]
    Config(String),
    #[error("analysis output missing: {0}")]
    MissingAnalysis(PathBuf),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl PipelineError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), message: err.to_string() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PipelineError::Ingest(e) => e.name(),
            PipelineError::Invalid(_) => "Invalid",
            PipelineError::Classify(e) => e.name(),
            PipelineError::Conversation(e) => e.name(),
            PipelineError::EyeContact(e) => e.name(),
            PipelineError::Metrics(e) => e.name(),
            PipelineError::Config(_) => "Config",
            PipelineError::MissingAnalysis(_) => "MissingAnalysis",
            PipelineError::Io { .. } => "Io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConversationClassifier {
    Rule,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConversationParams {
    pub enabled: bool,
    pub classifier: ConversationClassifier,
    /// Bundled rule set to use when `rules_path` is unset.
    pub language: String,
    pub rules_path: Option<PathBuf>,
    /// Labels already present in the transcript are kept; only unlabeled
    /// utterances go through the classifier.
    pub keep_annotations: bool,
    pub adapter: Option<AdapterConfig>,
}

impl Default for ConversationParams {
    fn default() -> Self {
        Self {
            enabled: true,
            classifier: ConversationClassifier::Rule,
            language: "en".into(),
            rules_path: None,
            keep_annotations: true,
            adapter: None,
        }
    }
}

/// Every tunable of a run. Read from a JSON config file; absent keys take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Unset picks per stream: [`ClassifierParams::low_rate`] below 30 Hz,
    /// the defaults otherwise.
    pub classifier: Option<ClassifierParams>,
    /// Gaze-to-frame alignment tolerance.
    pub align_tolerance_ms: f64,
    pub category_priority: CategoryPriority,
    /// Draw order of overlapping boxes in box-track label files.
    pub box_priority: Option<Vec<u32>>,
    pub eye_contact: EyeContactParams,
    pub conversation: ConversationParams,
    pub transition: TransitionOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            classifier: None,
            align_tolerance_ms: 60.0,
            category_priority: CategoryPriority::default(),
            box_priority: None,
            eye_contact: EyeContactParams::default(),
            conversation: ConversationParams::default(),
            transition: TransitionOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn classifier_for(&self, meta: &StreamMeta) -> ClassifierParams {
        match &self.classifier {
            Some(p) => p.clone(),
            None if meta.nominal_rate_hz < 30.0 => ClassifierParams::low_rate(),
            None => ClassifierParams::default(),
        }
    }

    pub fn align_tolerance_ns(&self) -> Nanos {
        ms_to_ns(self.align_tolerance_ms)
    }

    pub fn rule_set(&self) -> Result<conversation::RuleSet, PipelineError> {
        match &self.conversation.rules_path {
            Some(p) => Ok(conversation::RuleSet::from_path(p)?),
            None => conversation::RuleSet::bundled(&self.conversation.language)
                .ok_or_else(|| PipelineError::Config(format!("no bundled rules for `{}`", self.conversation.language))),
        }
    }
}

/// One wearer's loaded streams, all on the session clock.
#[derive(Debug, Clone)]
pub struct WearerData {
    pub entry: WearerEntry,
    pub gaze: GazeTrack,
    pub labels: Option<LabelSource>,
    pub faces: Option<FaceTrackSet>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub manifest: SessionManifest,
    /// Manifest order.
    pub wearers: Vec<WearerData>,
    /// Utterances from every transcript, sorted by start time.
    pub utterances: Option<Vec<Utterance>>,
}

impl Session {
    pub fn wearer(&self, id: &str) -> Option<&WearerData> {
        self.wearers.iter().find(|w| w.entry.wearer_id == id)
    }

    pub fn leader(&self) -> &WearerData {
        self.wearer(&self.manifest.leader_id).expect("validated manifest names a present leader")
    }
}

/// Violations (which fail validation) and warnings (which do not).
#[derive(Debug, Default)]
pub struct Validation {
    pub errors: Vec<IngestError>,
    pub warnings: Vec<String>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Load every stream named by the manifest, collecting all violations.
/// A session is returned only when there are none.
pub fn load_session(manifest_path: &Path, cfg: &RunConfig) -> (Option<Session>, Validation) {
    let mut v = Validation::default();
    let mf = match ingest::parse_manifest(manifest_path) {
        Ok(m) => m,
        Err(e) => {
            v.errors.push(e);
            return (None, v);
        }
    };
    let session = load_from_manifest(&mf, cfg, &mut v);
    (session.filter(|_| v.errors.is_empty()), v)
}

fn load_from_manifest(mf: &ManifestFile, cfg: &RunConfig, v: &mut Validation) -> Option<Session> {
    let m = &mf.manifest;
    let box_priority = match &cfg.box_priority {
        Some(order) => {
            if let Err(e) = check_box_priority(order, &m.category_map) {
                v.errors.push(e);
            }
            order.clone()
        }
        None => default_box_priority(&m.category_map, &cfg.category_priority),
    };
    let mut wearers = Vec::new();
    let mut utterances: Option<Vec<Utterance>> = None;
    for w in &m.wearers {
        let gaze = match ingest::load_gaze_track(&mf.resolve(&w.gaze), &w.wearer_id, w.stream, w.clock_offset_ns) {
            Ok(g) => Some(g),
            Err(e) => {
                v.errors.push(e);
                None
            }
        };
        let labels = w.labelmaps.as_ref().and_then(|p| {
            let ctx = LabelContext {
                category_map: &m.category_map,
                meta: w.stream,
                clock_offset_ns: w.clock_offset_ns,
                box_priority: box_priority.clone(),
            };
            parse_label_source(&mf.resolve(p), &ctx, &mut v.errors)
        });
        let faces = w
            .facetracks
            .as_ref()
            .and_then(|p| eye_contact::parse_face_tracks(&mf.resolve(p), &w.wearer_id, w.clock_offset_ns, &mut v.errors));
        if let Some(p) = &w.transcript {
            if let Some(mut u) = conversation::parse_transcript(&mf.resolve(p), w.clock_offset_ns, &mut v.errors) {
                utterances.get_or_insert_with(Vec::new).append(&mut u);
            }
        }
        if w.facetracks.is_none() && cfg.eye_contact.enabled {
            v.warnings.push(format!("wearer `{}` has no face tracks; its eye-contact dyad is skipped", w.wearer_id));
        }
        if w.wearer_id == m.leader_id && w.labelmaps.is_none() {
            v.warnings.push(format!("leader `{}` has no label maps; fixation metrics are skipped", w.wearer_id));
        }
        if let Some(gaze) = gaze {
            wearers.push(WearerData { entry: w.clone(), gaze, labels, faces });
        }
    }
    if utterances.is_none() && cfg.conversation.enabled {
        v.warnings.push("no transcript in the session; conversation metrics are skipped".into());
    }
    if let Some(u) = &mut utterances {
        u.sort_by_key(|u| (u.start_ns, u.end_ns));
    }
    Some(Session { manifest: m.clone(), wearers, utterances })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let c = RunConfig::from_json_str(r#"{"eye_contact":{"margin_px":4}}"#).unwrap();
        assert_eq!(c.eye_contact.margin_px, 4.0);
        assert_eq!(c.eye_contact.max_gap_ms, 100.0);
        assert_eq!(c.align_tolerance_ms, 60.0);
        assert!(RunConfig::from_json_str(r#"{"eye_contact":{"margin_px":"wide"}}"#).is_err());
        let low = StreamMeta { nominal_rate_hz: 10.0, ..StreamMeta::default() };
        assert!(!c.classifier_for(&low).smoothing_enabled);
        let high = StreamMeta { nominal_rate_hz: 200.0, ..StreamMeta::default() };
        assert!(c.classifier_for(&high).smoothing_enabled);
    }
}
