//! Session manifest: who wore which device, where their streams live, and how
//! object ids map to categories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;
use crate::category::Category;
use crate::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Member,
}

/// Geometry and timing of one wearer's recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub width: u32,
    pub height: u32,
    pub nominal_rate_hz: f64,
    #[serde(default)]
    pub frame_count: u64,
}

impl Default for StreamMeta {
    /// 1408 x 1408 RGB frames with 10 Hz eye tracking.
    fn default() -> Self {
        Self { width: 1408, height: 1408, nominal_rate_hz: 10.0, frame_count: 0 }
    }
}

impl StreamMeta {
    pub fn validate(&self, wearer_id: &str) -> Result<(), IngestError> {
        let bad = |reason: &str| IngestError::BadStreamMeta {
            wearer_id: wearer_id.to_string(),
            reason: reason.to_string(),
        };
        if self.width == 0 || self.height == 0 {
            return Err(bad("width and height must be positive"));
        }
        if !(self.nominal_rate_hz.is_finite() && self.nominal_rate_hz > 0.0) {
            return Err(bad("nominal_rate_hz must be positive"));
        }
        Ok(())
    }

    pub fn nominal_period_ns(&self) -> Nanos {
        (1e9 / self.nominal_rate_hz).round() as Nanos
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WearerEntry {
    pub wearer_id: String,
    pub role: Role,
    /// Added to device timestamps to obtain session time.
    pub clock_offset_ns: Nanos,
    pub gaze: PathBuf,
    #[serde(default)]
    pub labelmaps: Option<PathBuf>,
    #[serde(default)]
    pub facetracks: Option<PathBuf>,
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    #[serde(default)]
    pub stream: StreamMeta,
}

impl WearerEntry {
    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        std::iter::once(&self.gaze)
            .chain(self.labelmaps.iter())
            .chain(self.facetracks.iter())
            .chain(self.transcript.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session_id: String,
    pub epoch_ns: Nanos,
    pub leader_id: String,
    /// object id (>= 1) to category; 0 is background and maps to `unknown`.
    pub category_map: BTreeMap<u32, Category>,
    pub wearers: Vec<WearerEntry>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    /// Human leadership scores (e.g. TEAM, Ottawa), echoed into the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_scores: Option<BTreeMap<String, String>>,
}

impl SessionManifest {
    pub fn wearer(&self, id: &str) -> Option<&WearerEntry> {
        self.wearers.iter().find(|w| w.wearer_id == id)
    }

    pub fn leader(&self) -> &WearerEntry {
        self.wearer(&self.leader_id).expect("validated manifest names its leader")
    }

    pub fn members(&self) -> impl Iterator<Item = &WearerEntry> {
        self.wearers.iter().filter(|w| w.wearer_id != self.leader_id)
    }

    /// Category of an object id; 0 and unmapped ids are `unknown`.
    pub fn category_of(&self, object_id: u32) -> Category {
        self.category_map.get(&object_id).copied().unwrap_or(Category::Unknown)
    }

    pub fn n_objects(&self) -> u32 {
        self.category_map.keys().next_back().copied().unwrap_or(0)
    }

    /// Every invariant that survives deserialization.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = BTreeSet::new();
        for w in &self.wearers {
            if !seen.insert(w.wearer_id.as_str()) {
                return Err(IngestError::DuplicateWearer { wearer_id: w.wearer_id.clone() });
            }
        }
        for (&id, &cat) in &self.category_map {
            if id == 0 {
                return Err(IngestError::BadCategoryMap {
                    key: "0".into(),
                    reason: "object id 0 is reserved for background".into(),
                });
            }
            if cat == Category::Unknown {
                return Err(IngestError::BadCategoryMap {
                    key: id.to_string(),
                    reason: "`unknown` is implicit and cannot be mapped".into(),
                });
            }
        }
        let leaders: Vec<&WearerEntry> = self.wearers.iter().filter(|w| w.role == Role::Leader).collect();
        match self.wearer(&self.leader_id) {
            None => {
                return Err(IngestError::UnknownLeader {
                    leader_id: self.leader_id.clone(),
                    reason: "not among the wearers".into(),
                })
            }
            Some(w) if w.role != Role::Leader => {
                return Err(IngestError::UnknownLeader {
                    leader_id: self.leader_id.clone(),
                    reason: "declared with role member".into(),
                })
            }
            _ => {}
        }
        if leaders.len() > 1 {
            return Err(IngestError::UnknownLeader {
                leader_id: self.leader_id.clone(),
                reason: format!("{} wearers declare role leader", leaders.len()),
            });
        }
        let mut paths = BTreeSet::new();
        for w in &self.wearers {
            w.stream.validate(&w.wearer_id)?;
            for p in w.paths() {
                if !paths.insert(p.clone()) {
                    return Err(IngestError::DuplicatePath { path: p.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes infallibly")
    }
}

/// A parsed manifest together with the directory its relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestFile {
    pub manifest: SessionManifest,
    pub base_dir: PathBuf,
}

impl ManifestFile {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

const TOP_KEYS: [&str; 5] = ["session_id", "epoch_ns", "leader_id", "category_map", "wearers"];
const WEARER_KEYS: [&str; 4] = ["wearer_id", "role", "clock_offset_ns", "gaze"];

fn check_keys(doc: &Value) -> Result<(), IngestError> {
    let obj = doc.as_object().ok_or_else(|| IngestError::MissingField { key: "session_id".into() })?;
    for k in TOP_KEYS {
        if obj.get(k).is_none_or(Value::is_null) {
            return Err(IngestError::MissingField { key: k.into() });
        }
    }
    if let Some(Value::Array(ws)) = obj.get("wearers") {
        for (i, w) in ws.iter().enumerate() {
            for k in WEARER_KEYS {
                if w.get(k).is_none_or(Value::is_null) {
                    return Err(IngestError::MissingField { key: format!("wearers[{i}].{k}") });
                }
            }
        }
    }
    if let Some(Value::Object(map)) = obj.get("category_map") {
        for (k, v) in map {
            let id: i64 = k.trim().parse().map_err(|_| IngestError::BadCategoryMap {
                key: k.clone(),
                reason: "object id must be an integer".into(),
            })?;
            if id < 1 || id > u32::MAX as i64 {
                return Err(IngestError::BadCategoryMap {
                    key: k.clone(),
                    reason: "object ids must be positive; 0 is background".into(),
                });
            }
            let name = v.as_str().ok_or_else(|| IngestError::BadCategoryMap {
                key: k.clone(),
                reason: "category must be a string".into(),
            })?;
            let cat: Category = name
                .parse()
                .map_err(|reason| IngestError::BadCategoryMap { key: k.clone(), reason })?;
            if cat == Category::Unknown {
                return Err(IngestError::BadCategoryMap {
                    key: k.clone(),
                    reason: "`unknown` is implicit and cannot be mapped".into(),
                });
            }
        }
    }
    Ok(())
}

/// Parse and validate a manifest document held in memory.
pub fn parse_manifest_str(text: &str, origin: &Path) -> Result<SessionManifest, IngestError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IngestError::Malformed {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })?;
    check_keys(&doc)?;
    let manifest: SessionManifest = serde_json::from_value(doc).map_err(|e| IngestError::Malformed {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn parse_manifest(path: &Path) -> Result<ManifestFile, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let manifest = parse_manifest_str(&text, path)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(ManifestFile { manifest, base_dir })
}
