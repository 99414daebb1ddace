use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::spec::{LabelFormat, Planted, SynthSpec, SynthWearer, Target};
use super::SynthError;
use crate::conversation::{transcript_to_jsonl, Label, LabelSource as UttLabelSource, Utterance};
use crate::eye_contact::{FaceBox, FaceFrame, FaceTrackSet};
use crate::ingest::{jsonl, RawGazeRecord, Role, SessionManifest, StreamMeta, WearerEntry};
use crate::metrics_report::TransitionMatrix;
use crate::object_fixation::{default_box_priority, BoxFrame, BoxTrackLabelSource, LabelSource};
use crate::pipeline::RunConfig;
use crate::{ms_to_ns, BBox, Category, CategoryPriority, Nanos, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthKind {
    Fixation,
    Saccade,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub kind: TruthKind,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthWindow {
    pub member: String,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
}

/// What the generator planted, on the session clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub session_id: String,
    pub leader_id: String,
    pub events: BTreeMap<String, Vec<TruthEvent>>,
    pub mutual_windows: Vec<TruthWindow>,
    pub ec_per_dyad: BTreeMap<String, usize>,
    pub ec_total: usize,
    pub leader_transition: TransitionMatrix,
    pub utterances: Vec<Utterance>,
}

impl GroundTruth {
    pub fn fixations<'a>(&'a self, wearer: &str) -> impl Iterator<Item = &'a TruthEvent> + 'a {
        self.events.get(wearer).into_iter().flatten().filter(|e| e.kind == TruthKind::Fixation)
    }

    pub fn from_path(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynthError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SynthError::BadSpec(format!("{}: {e}", path.display())))
    }
}

/// Generated files by name, plus the ground truth (also among the files as
/// `truth.json`).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub files: BTreeMap<String, String>,
    pub truth: GroundTruth,
}

impl SynthOutput {
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir).map_err(|e| SynthError::Io(format!("{}: {e}", dir.display())))?;
        for (name, text) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| SynthError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum SegKind {
    Fix(Point),
    Sac(Point, Point),
    Gap,
}

#[derive(Debug, Clone)]
struct Seg {
    start: Nanos,
    end: Nanos,
    kind: SegKind,
}

impl Seg {
    fn fix_point(&self) -> Option<Point> {
        match self.kind {
            SegKind::Fix(p) => Some(p),
            _ => None,
        }
    }
}

fn infeasible(wearer: &str, reason: String) -> SynthError {
    SynthError::InfeasibleScript { wearer_id: wearer.to_string(), reason }
}

fn resolve(w: &SynthWearer, t: &Target) -> Result<Point, SynthError> {
    match t {
        Target::Object(id) => w
            .objects
            .iter()
            .find(|o| o.id == *id)
            .map(|o| o.bbox().center())
            .ok_or_else(|| SynthError::BadSpec(format!("`{}` has no object {id}", w.wearer_id))),
        Target::Face(p) => w
            .faces
            .get(p)
            .map(|&[x0, y0, x1, y1]| BBox::new(x0, y0, x1, y1).center())
            .ok_or_else(|| SynthError::BadSpec(format!("`{}` has no face box for `{p}`", w.wearer_id))),
        Target::Point([x, y]) => Ok(Point::new(*x, *y)),
    }
}

/// Planted segments of one wearer, mutual windows included, sorted.
fn planted_segments(spec: &SynthSpec, w: &SynthWearer) -> Result<Vec<Seg>, SynthError> {
    let mut out = Vec::new();
    let mut push = |start_ms: f64, dur_ms: f64, kind: SegKind| {
        out.push(Seg { start: ms_to_ns(start_ms), end: ms_to_ns(start_ms + dur_ms), kind });
    };
    for p in &w.planted {
        match p {
            Planted::Fixation { start_ms, duration_ms, target } => push(*start_ms, *duration_ms, SegKind::Fix(resolve(w, target)?)),
            Planted::Gap { start_ms, duration_ms } => push(*start_ms, *duration_ms, SegKind::Gap),
        }
    }
    for m in &spec.mutual_windows {
        if w.wearer_id == spec.leader_id {
            let p = resolve(w, &Target::Face(m.member.clone()))?;
            push(m.start_ms, m.duration_ms, SegKind::Fix(p));
        } else if w.wearer_id == m.member {
            let p = resolve(w, &Target::Face(spec.leader_id.clone()))?;
            push(m.start_ms - m.lead_ms, m.duration_ms + 2.0 * m.lead_ms, SegKind::Fix(p));
        }
    }
    out.sort_by_key(|s| s.start);
    Ok(out)
}

fn pick(rng: &mut ChaCha8Rng, candidates: &[Point], avoid: &[Option<Point>]) -> Option<Point> {
    let ok: Vec<Point> = candidates
        .iter()
        .copied()
        .filter(|c| avoid.iter().flatten().all(|a| a.distance(c) > 1.0))
        .collect();
    (!ok.is_empty()).then(|| ok[rng.random_range(0..ok.len())])
}

/// Tile `[0, duration]` with planted segments, random fill fixations and the
/// saccades between consecutive fixations.
fn build_timeline(spec: &SynthSpec, w: &SynthWearer, rng: &mut ChaCha8Rng) -> Result<Vec<Seg>, SynthError> {
    let id = &w.wearer_id;
    let total = ms_to_ns(spec.duration_s * 1000.0);
    let sac = ms_to_ns(spec.saccade_ms);
    let min_fix = ms_to_ns(w.fill.min_fixation_ms);
    let max_fix = ms_to_ns(w.fill.max_fixation_ms);
    if min_fix <= 0 || max_fix < min_fix {
        return Err(SynthError::BadSpec(format!("`{id}`: fill durations must satisfy 0 < min <= max")));
    }
    let candidates: Vec<Point> = if w.fill.targets.is_empty() {
        w.objects
            .iter()
            .map(|o| o.bbox().center())
            .chain(w.fill.extra_points.iter().map(|&[x, y]| Point::new(x, y)))
            .collect()
    } else {
        w.fill.targets.iter().map(|t| resolve(w, t)).collect::<Result<_, _>>()?
    };

    let mut planted = planted_segments(spec, w)?;
    for p in &planted {
        if p.start < 0 || p.end > total || p.end <= p.start {
            return Err(infeasible(id, format!("segment at {} ns lies outside the session or is empty", p.start)));
        }
    }
    for pair in planted.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let both_fix = a.fix_point().is_some() && b.fix_point().is_some();
        if b.start < a.end || (both_fix && b.start - a.end < sac) {
            return Err(infeasible(id, format!("segments at {} ns and {} ns overlap or leave no room for a saccade", a.start, b.start)));
        }
    }

    let mut segs: Vec<Seg> = Vec::new();
    let mut cursor = 0;
    let n = planted.len();
    for i in 0..=n {
        let b = if i < n { planted[i].start } else { total };
        let next_fix = if i < n { planted[i].fix_point() } else { None };
        let prev_fix = segs.last().and_then(Seg::fix_point);
        let lead = if prev_fix.is_some() { sac } else { 0 };
        let trail = if next_fix.is_some() { sac } else { 0 };
        let avail = b - cursor - lead - trail;
        if avail >= min_fix {
            let mut t = cursor + lead;
            let mut last = prev_fix;
            loop {
                let room = b - trail - t;
                let mut d = rng.random_range(min_fix..=max_fix);
                let closing = room - d < sac + min_fix;
                if closing {
                    d = room;
                }
                let avoid = if closing { vec![last, next_fix] } else { vec![last] };
                let p = pick(rng, &candidates, &avoid)
                    .ok_or_else(|| infeasible(id, "no fill target differs from its neighbours".into()))?;
                segs.push(Seg { start: t, end: t + d, kind: SegKind::Fix(p) });
                last = Some(p);
                t += d;
                if closing {
                    break;
                }
                t += sac;
            }
        } else if b > cursor || (i < n && segs.is_empty()) {
            match (segs.last_mut(), next_fix) {
                (Some(prev), Some(np)) if prev.fix_point().is_some() => {
                    if prev.fix_point().unwrap().distance(&np) <= 1.0 {
                        return Err(infeasible(id, format!("fixations at {} ns and {} ns share a target with no room between", prev.start, b)));
                    }
                    prev.end = b - sac;
                }
                (Some(prev), _) => prev.end = b,
                (None, _) if i < n => planted[i].start = cursor,
                (None, _) => segs.push(Seg { start: cursor, end: b, kind: SegKind::Gap }),
            }
        }
        if i < n {
            cursor = planted[i].end;
            segs.push(planted[i].clone());
        }
    }

    let mut out: Vec<Seg> = Vec::with_capacity(segs.len() * 2);
    for s in segs {
        if let Some(prev) = out.last() {
            if prev.end < s.start {
                match (prev.fix_point(), s.fix_point()) {
                    (Some(a), Some(b)) if s.start - prev.end == sac => {
                        out.push(Seg { start: prev.end, end: s.start, kind: SegKind::Sac(a, b) })
                    }
                    _ => unreachable!("timeline hole outside a saccade slot"),
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}

fn times(total: Nanos, rate_hz: f64) -> Vec<Nanos> {
    (0u64..)
        .map(|k| (k as f64 * 1e9 / rate_hz).round() as Nanos)
        .take_while(|&t| t <= total)
        .collect()
}

fn gaze_at(segs: &[Seg], t: Nanos) -> Option<Point> {
    let idx = segs.partition_point(|s| s.start <= t).checked_sub(1)?;
    let s = &segs[idx];
    match s.kind {
        SegKind::Fix(p) => Some(p),
        SegKind::Sac(a, b) => {
            let f = (t - s.start) as f64 / (s.end - s.start) as f64;
            Some(Point::new(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f))
        }
        SegKind::Gap => None,
    }
}

const NAMES: [&str; 3] = ["Tanaka", "Suzuki", "Sato"];
const DRUGS: [&str; 3] = ["adrenaline", "saline", "atropine"];

/// English text the bundled `en` rules label as `label`.
pub fn utterance_template(label: Label, variant: usize, name_idx: usize) -> String {
    let name = NAMES[name_idx % NAMES.len()];
    let drug = DRUGS[name_idx % DRUGS.len()];
    let v = variant % 3;
    match label {
        Label::DO => [
            format!("Give 5 ml {drug} now, {name}."),
            format!("{name}, push the {drug} now."),
            format!("{name}, check the pulse now."),
        ][v]
            .clone(),
        Label::UO => [
            format!("We need {drug} ready."),
            "Someone get the defibrillator pads.".to_string(),
            "Can anyone take over compressions?".to_string(),
        ][v]
            .clone(),
        Label::PL => [
            "Next we will recheck the blood gas in five minutes.".to_string(),
            "The plan is to intubate after this dose.".to_string(),
            "After this cycle we will reassess the rhythm.".to_string(),
        ][v]
            .clone(),
        Label::TA => [
            format!("{name}, you are in charge of the airway."),
            format!("{name}, your job is the medication record."),
            format!("{name} is responsible for the monitor."),
        ][v]
            .clone(),
        Label::NONE => ["Okay.".to_string(), "Let me see the monitor.".to_string(), "Good, the rhythm looks stable.".to_string()][v]
            .clone(),
    }
}

/// Generate every session file and the ground truth. Identical specs give
/// identical output, byte for byte.
pub fn generate_session(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = ms_to_ns(spec.duration_s * 1000.0);
    let category_map = spec.category_map();
    let box_priority = default_box_priority(&category_map, &CategoryPriority::default());
    let frame_times = times(total, spec.frame_rate_hz);
    let gaze_times = times(total, spec.gaze_rate_hz);
    let noise = Normal::new(0.0, spec.noise_px).map_err(|e| SynthError::BadSpec(e.to_string()))?;

    let mut files = BTreeMap::new();
    let mut entries = Vec::new();
    let mut truth_events = BTreeMap::new();
    let mut leader_seq: Vec<(usize, Category)> = Vec::new();

    for w in &spec.wearers {
        let id = &w.wearer_id;
        let offset = w.clock_offset_ns;
        let segs = build_timeline(spec, w, &mut rng)?;

        let gaze: Vec<RawGazeRecord> = gaze_times
            .iter()
            .map(|&t| {
                let (x, y) = match gaze_at(&segs, t) {
                    Some(p) if spec.noise_px > 0.0 => (p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng)),
                    Some(p) => (p.x, p.y),
                    None => (-1.0, -1.0),
                };
                RawGazeRecord { t_ns: t - offset, x, y, conf: None }
            })
            .collect();
        files.insert(format!("{id}_gaze.jsonl"), jsonl::to_string(&gaze));

        let boxes = BoxTrackLabelSource {
            frames: frame_times
                .iter()
                .enumerate()
                .map(|(k, &t)| BoxFrame {
                    frame_idx: k as u64,
                    t_ns: t,
                    boxes: w.objects.iter().map(|o| (o.id, o.bbox())).collect(),
                })
                .collect(),
            priority: box_priority.clone(),
            width: spec.width,
            height: spec.height,
        };
        let labels_name = (!w.objects.is_empty()).then(|| format!("{id}_labels.jsonl"));
        if let Some(name) = &labels_name {
            let text = match spec.label_format {
                LabelFormat::Boxes => boxes.to_jsonl(offset),
                LabelFormat::Raster => {
                    boxes.render(category_map.keys().max().copied().unwrap_or(0), "synth").to_jsonl(offset)
                }
            };
            files.insert(name.clone(), text);
        }
        let lookup = LabelSource::Boxes(boxes);

        let faces_name = (!w.faces.is_empty()).then(|| format!("{id}_faces.jsonl"));
        if let Some(name) = &faces_name {
            let set = FaceTrackSet {
                video_owner: id.clone(),
                frames: frame_times
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| FaceFrame {
                        frame_idx: k as u64,
                        t_ns: t,
                        boxes: w
                            .faces
                            .iter()
                            .map(|(person, &[x0, y0, x1, y1])| FaceBox { person_id: person.clone(), x0, y0, x1, y1, conf: 1.0 })
                            .collect(),
                    })
                    .collect(),
            };
            files.insert(name.clone(), set.to_jsonl(offset));
        }

        let mut events = Vec::with_capacity(segs.len());
        for s in &segs {
            let (kind, object_id, category, point) = match s.kind {
                SegKind::Fix(p) => {
                    let oid = lookup.label_at_position(0, p).unwrap_or(0);
                    let cat = category_map.get(&oid).copied().unwrap_or(Category::Unknown);
                    (TruthKind::Fixation, Some(oid), Some(cat), Some([p.x, p.y]))
                }
                SegKind::Sac(..) => (TruthKind::Saccade, None, None, None),
                SegKind::Gap => (TruthKind::Gap, None, None, None),
            };
            if id == &spec.leader_id {
                if let Some(c) = category {
                    leader_seq.push((leader_seq.len(), c));
                }
            }
            events.push(TruthEvent { kind, start_ns: s.start, end_ns: s.end, object_id, category, point });
        }
        truth_events.insert(id.clone(), events);

        let role = if id == &spec.leader_id { Role::Leader } else { Role::Member };
        let transcript = (role == Role::Leader && !spec.utterances.is_empty()).then(|| "transcript.jsonl".to_string());
        entries.push(WearerEntry {
            wearer_id: id.clone(),
            role,
            clock_offset_ns: offset,
            gaze: format!("{id}_gaze.jsonl").into(),
            labelmaps: labels_name.map(Into::into),
            facetracks: faces_name.map(Into::into),
            transcript: transcript.map(Into::into),
            stream: StreamMeta {
                width: spec.width,
                height: spec.height,
                nominal_rate_hz: spec.gaze_rate_hz,
                frame_count: frame_times.len() as u64,
            },
        });
    }

    let mut utterances: Vec<Utterance> = spec
        .utterances
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let text = u.text.clone().unwrap_or_else(|| {
                let variant = rng.random_range(0..3usize);
                utterance_template(u.label, variant, i)
            });
            let start = ms_to_ns(u.start_ms);
            Utterance::new(start, start + ms_to_ns(u.duration_ms), &u.speaker, &text)
                .labeled(u.label, UttLabelSource::Annotation)
        })
        .collect();
    utterances.sort_by_key(|u| (u.start_ns, u.end_ns));
    if !utterances.is_empty() {
        let leader_offset = spec.wearer(&spec.leader_id).map_or(0, |w| w.clock_offset_ns);
        let written: Vec<Utterance> = if spec.transcript_labels {
            utterances.clone()
        } else {
            utterances.iter().map(|u| Utterance { label: None, ..u.clone() }).collect()
        };
        files.insert("transcript.jsonl".into(), transcript_to_jsonl(&written, leader_offset));
    }

    let faces_of = |w: &str| spec.wearer(w).map(|w| &w.faces);
    let mut ec_per_dyad = BTreeMap::new();
    for m in spec.wearers.iter().filter(|w| w.wearer_id != spec.leader_id) {
        let has_faces = faces_of(&spec.leader_id).is_some_and(|f| !f.is_empty()) && !m.faces.is_empty();
        if has_faces {
            ec_per_dyad.insert(m.wearer_id.clone(), spec.mutual_windows.iter().filter(|w| w.member == m.wearer_id).count());
        }
    }
    let truth = GroundTruth {
        session_id: spec.session_id.clone(),
        leader_id: spec.leader_id.clone(),
        events: truth_events,
        mutual_windows: spec
            .mutual_windows
            .iter()
            .map(|w| TruthWindow {
                member: w.member.clone(),
                start_ns: ms_to_ns(w.start_ms),
                end_ns: ms_to_ns(w.start_ms + w.duration_ms),
            })
            .collect(),
        ec_total: ec_per_dyad.values().sum(),
        ec_per_dyad,
        leader_transition: TransitionMatrix::from_sequence(&leader_seq, Category::ALL.to_vec(), true),
        utterances,
    };

    let manifest = SessionManifest {
        session_id: spec.session_id.clone(),
        epoch_ns: 0,
        leader_id: spec.leader_id.clone(),
        category_map,
        wearers: entries,
        notes: format!("synthetic session, seed {}", spec.seed),
        human_scores: spec.human_scores.clone(),
    };
    files.insert("manifest.json".into(), manifest.to_json_string());
    files.insert("truth.json".into(), serde_json::to_string_pretty(&truth).expect("truth serializes") + "\n");
    files.insert(
        "analysis_config.json".into(),
        serde_json::to_string_pretty(&RunConfig::default()).expect("config serializes") + "\n",
    );
    Ok(SynthOutput { files, truth })
}
