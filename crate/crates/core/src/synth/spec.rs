use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::conversation::Label;
use crate::{BBox, Category, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelFormat {
    /// Box tracks; compact, suits long sessions.
    Boxes,
    /// Run-length rasters rendered from the boxes.
    Raster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthObject {
    pub id: u32,
    pub category: Category,
    /// `[x0, y0, x1, y1]` in pixels.
    pub bbox: [f64; 4],
}

impl SynthObject {
    pub fn bbox(&self) -> BBox {
        let [x0, y0, x1, y1] = self.bbox;
        BBox::new(x0, y0, x1, y1)
    }
}

/// Where a planted fixation lands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Centre of an object box.
    Object(u32),
    /// Centre of another wearer's face box in this wearer's view.
    Face(String),
    /// A fixed point, typically background.
    Point([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Planted {
    Fixation { start_ms: f64, duration_ms: f64, target: Target },
    /// Tracking loss: samples are written as invalid.
    Gap { start_ms: f64, duration_ms: f64 },
}

impl Planted {
    pub fn span_ms(&self) -> (f64, f64) {
        match self {
            Planted::Fixation { start_ms, duration_ms, .. } | Planted::Gap { start_ms, duration_ms } => {
                (*start_ms, start_ms + duration_ms)
            }
        }
    }
}

/// Random fixations filling the time between planted segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FillSpec {
    pub min_fixation_ms: f64,
    pub max_fixation_ms: f64,
    /// Empty means every object centre plus `extra_points`.
    pub targets: Vec<Target>,
    pub extra_points: Vec<[f64; 2]>,
}

impl Default for FillSpec {
    fn default() -> Self {
        Self { min_fixation_ms: 400.0, max_fixation_ms: 2500.0, targets: Vec::new(), extra_points: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthWearer {
    pub wearer_id: String,
    #[serde(default)]
    pub clock_offset_ns: i64,
    /// Objects visible in this wearer's video.
    #[serde(default)]
    pub objects: Vec<SynthObject>,
    /// Face box of each other wearer in this wearer's video.
    #[serde(default)]
    pub faces: BTreeMap<String, [f64; 4]>,
    #[serde(default)]
    pub planted: Vec<Planted>,
    #[serde(default)]
    pub fill: FillSpec,
}

/// Leader and member look at each other's faces. The leader's fixation spans
/// the window; the member's starts `lead_ms` earlier and ends `lead_ms` later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualWindow {
    pub member: String,
    pub start_ms: f64,
    pub duration_ms: f64,
    #[serde(default = "default_lead")]
    pub lead_ms: f64,
}

fn default_lead() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthUtterance {
    pub speaker: String,
    pub start_ms: f64,
    pub duration_ms: f64,
    pub label: Label,
    /// Generated from the label when absent.
    #[serde(default)]
    pub text: Option<String>,
}

/// Everything needed to generate one synthetic session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub session_id: String,
    pub duration_s: f64,
    #[serde(default = "default_gaze_rate")]
    pub gaze_rate_hz: f64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate_hz: f64,
    #[serde(default = "default_size")]
    pub width: u32,
    #[serde(default = "default_size")]
    pub height: u32,
    /// Gaussian sigma of gaze jitter, px.
    #[serde(default)]
    pub noise_px: f64,
    #[serde(default = "default_saccade")]
    pub saccade_ms: f64,
    #[serde(default = "default_format")]
    pub label_format: LabelFormat,
    pub leader_id: String,
    pub wearers: Vec<SynthWearer>,
    #[serde(default)]
    pub mutual_windows: Vec<MutualWindow>,
    #[serde(default)]
    pub utterances: Vec<SynthUtterance>,
    /// Write the planted labels into the transcript as annotations.
    #[serde(default)]
    pub transcript_labels: bool,
    #[serde(default)]
    pub human_scores: Option<BTreeMap<String, String>>,
}

fn default_gaze_rate() -> f64 {
    10.0
}
fn default_frame_rate() -> f64 {
    30.0
}
fn default_size() -> u32 {
    1408
}
fn default_saccade() -> f64 {
    40.0
}
fn default_format() -> LabelFormat {
    LabelFormat::Boxes
}

impl SynthSpec {
    pub fn from_json_str(text: &str) -> Result<Self, SynthError> {
        serde_json::from_str(text).map_err(|e| SynthError::BadSpec(e.to_string()))
    }

    pub fn wearer(&self, id: &str) -> Option<&SynthWearer> {
        self.wearers.iter().find(|w| w.wearer_id == id)
    }

    pub fn category_map(&self) -> BTreeMap<u32, Category> {
        self.wearers.iter().flat_map(|w| w.objects.iter().map(|o| (o.id, o.category))).collect()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadSpec(m));
        if !(self.duration_s > 0.0) || !(self.gaze_rate_hz > 0.0) || !(self.frame_rate_hz > 0.0) {
            return bad("duration and rates must be positive".into());
        }
        if !(self.noise_px >= 0.0) {
            return bad("noise_px must be non-negative".into());
        }
        if !(self.saccade_ms > 0.0) {
            return bad("saccade_ms must be positive".into());
        }
        if self.wearer(&self.leader_id).is_none() {
            return bad(format!("leader `{}` is not a wearer", self.leader_id));
        }
        let mut seen = BTreeMap::new();
        for w in &self.wearers {
            if seen.insert(w.wearer_id.clone(), ()).is_some() {
                return bad(format!("wearer `{}` listed twice", w.wearer_id));
            }
            let frame = BBox::new(0.0, 0.0, self.width as f64, self.height as f64);
            for o in &w.objects {
                if o.id == 0 || o.category == Category::Unknown {
                    return bad(format!("object {} must have a positive id and a known category", o.id));
                }
                let b = o.bbox();
                if !b.is_valid() || !frame.contains_closed(Point::new(b.x0, b.y0), 0.0) || !frame.contains_closed(Point::new(b.x1, b.y1), 0.0) {
                    return bad(format!("object {} box must be non-degenerate and inside the frame", o.id));
                }
            }
        }
        let mut cats: BTreeMap<u32, Category> = BTreeMap::new();
        for o in self.wearers.iter().flat_map(|w| &w.objects) {
            if cats.insert(o.id, o.category).is_some_and(|c| c != o.category) {
                return bad(format!("object {} has two categories", o.id));
            }
        }
        for m in &self.mutual_windows {
            let Some(member) = self.wearer(&m.member) else {
                return bad(format!("mutual window names unknown wearer `{}`", m.member));
            };
            if m.member == self.leader_id {
                return bad("a mutual window needs a member other than the leader".into());
            }
            if !self.wearer(&self.leader_id).unwrap().faces.contains_key(&m.member) || !member.faces.contains_key(&self.leader_id) {
                return bad(format!("mutual window with `{}` needs both face boxes", m.member));
            }
        }
        Ok(())
    }

    /// A ten-minute-style session: a leader and two members at 10 Hz gaze and
    /// 30 Hz video, eleven planted mutual-gaze windows, a few tracking gaps,
    /// and labeled leader utterances. Every fixation target is at least 100 px
    /// from any other and every object is at least 100 px wide. Durations under
    /// 30 s leave no room for the eleven windows and fail as infeasible.
    pub fn standard(seed: u64, duration_s: f64, noise_px: f64) -> Self {
        let obj = |id, category, b: [f64; 4]| SynthObject { id, category, bbox: b };
        let leader = SynthWearer {
            wearer_id: "L".into(),
            clock_offset_ns: 0,
            objects: vec![
                obj(1, Category::Patient, [500.0, 700.0, 900.0, 1100.0]),
                obj(2, Category::Member, [100.0, 300.0, 350.0, 900.0]),
                obj(3, Category::Member, [1050.0, 300.0, 1300.0, 900.0]),
                obj(4, Category::Screen, [500.0, 100.0, 900.0, 400.0]),
                obj(5, Category::Device, [1000.0, 1000.0, 1300.0, 1300.0]),
            ],
            faces: BTreeMap::from([
                ("M1".to_string(), [160.0, 320.0, 290.0, 460.0]),
                ("M2".to_string(), [1110.0, 320.0, 1240.0, 460.0]),
            ]),
            planted: Vec::new(),
            fill: FillSpec { extra_points: vec![[200.0, 1200.0]], ..FillSpec::default() },
        };
        let m1 = SynthWearer {
            wearer_id: "M1".into(),
            clock_offset_ns: 250_000_000,
            objects: vec![
                obj(6, Category::Patient, [400.0, 700.0, 800.0, 1100.0]),
                obj(7, Category::Member, [900.0, 300.0, 1150.0, 900.0]),
                obj(8, Category::Device, [100.0, 1000.0, 400.0, 1300.0]),
            ],
            faces: BTreeMap::from([("L".to_string(), [960.0, 320.0, 1090.0, 460.0])]),
            planted: Vec::new(),
            fill: FillSpec::default(),
        };
        let m2 = SynthWearer {
            wearer_id: "M2".into(),
            clock_offset_ns: -120_000_000,
            objects: vec![
                obj(9, Category::Patient, [700.0, 700.0, 1100.0, 1100.0]),
                obj(10, Category::Member, [200.0, 300.0, 450.0, 900.0]),
                obj(11, Category::Screen, [600.0, 100.0, 1000.0, 400.0]),
            ],
            faces: BTreeMap::from([("L".to_string(), [260.0, 320.0, 390.0, 460.0])]),
            planted: Vec::new(),
            fill: FillSpec::default(),
        };
        let total_ms = duration_s * 1000.0;
        let slot = total_ms / 11.0;
        let mutual_windows = (0..11)
            .map(|i| MutualWindow {
                member: if i % 2 == 0 { "M1" } else { "M2" }.into(),
                start_ms: (i as f64 * slot + slot * 0.4).round(),
                duration_ms: 800.0,
                lead_ms: 300.0,
            })
            .collect();
        let mut wearers = vec![leader, m1, m2];
        for (k, w) in wearers.iter_mut().enumerate() {
            // two tracking gaps per wearer, away from the mutual windows
            for j in 0..2 {
                let start = ((2 * j + 1) as f64 * slot + slot * (0.75 + 0.03 * k as f64)).round();
                w.planted.push(Planted::Gap { start_ms: start, duration_ms: 500.0 });
            }
        }
        let labels = [Label::DO, Label::UO, Label::PL, Label::TA, Label::NONE, Label::UO, Label::DO, Label::PL];
        let n_utts = ((total_ms - 4000.0) / 14_000.0).floor().max(0.0) as usize;
        let mut utterances: Vec<SynthUtterance> = (0..n_utts)
            .map(|i| SynthUtterance {
                speaker: "L".into(),
                start_ms: 2000.0 + i as f64 * 14_000.0,
                duration_ms: 2500.0,
                label: labels[i % labels.len()],
                text: None,
            })
            .collect();
        utterances.extend((0..n_utts / 4).map(|i| SynthUtterance {
            speaker: "M1".into(),
            start_ms: 9000.0 + i as f64 * 56_000.0,
            duration_ms: 1500.0,
            label: Label::NONE,
            text: Some("Understood.".into()),
        }));
        Self {
            seed,
            session_id: format!("synth-{seed}"),
            duration_s,
            gaze_rate_hz: 10.0,
            frame_rate_hz: 30.0,
            width: 1408,
            height: 1408,
            noise_px,
            saccade_ms: 40.0,
            label_format: LabelFormat::Boxes,
            leader_id: "L".into(),
            wearers,
            mutual_windows,
            utterances,
            transcript_labels: false,
            human_scores: None,
        }
    }
}
