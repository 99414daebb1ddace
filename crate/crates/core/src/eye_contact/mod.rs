//! Mutual eye contact: an instant counts when each wearer's gaze falls inside
//! the other's face box in their own video at the same time. Instants are then
//! grouped into events, which are what gets counted.

mod faces;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use faces::{load_face_tracks, parse_face_tracks, FaceBox, FaceFrame, FaceTrackSet};

use crate::ingest::FramedGaze;
use crate::{ms_to_ns, BBox, Nanos, Point};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EyeContactError {
    #[error("face tracks missing for `{wearer_id}`")]
    MissingFaceTracks { wearer_id: String },
}

impl EyeContactError {
    pub fn name(&self) -> &'static str {
        "MissingFaceTracks"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EyeContactParams {
    pub enabled: bool,
    pub margin_px: f64,
    /// Leader frames pair with the nearest member frame within this distance.
    pub pairing_tolerance_ms: f64,
    pub max_gap_ms: f64,
    pub min_duration_ms: f64,
}

impl Default for EyeContactParams {
    fn default() -> Self {
        Self { enabled: true, margin_px: 0.0, pairing_tolerance_ms: 60.0, max_gap_ms: 100.0, min_duration_ms: 100.0 }
    }
}

/// Closed-interval containment with a margin.
pub fn gaze_in_box(point: Point, bbox: &BBox, margin_px: f64) -> bool {
    bbox.contains_closed(point, margin_px)
}

/// One wearer's face detections and the gaze aligned to that video's frames.
#[derive(Debug, Clone, Copy)]
pub struct WearerView<'a> {
    pub wearer_id: &'a str,
    pub faces: &'a FaceTrackSet,
    /// Must share `faces`' frame clock, frame for frame.
    pub gaze: &'a FramedGaze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MutualInstant {
    /// Time of the first wearer's frame.
    pub t_ns: Nanos,
    pub frame_a: u64,
    pub frame_b: u64,
}

fn nearest_frame(frames: &[crate::ingest::FramedSample], t: Nanos, tol: Nanos) -> Option<usize> {
    let pos = frames.partition_point(|f| f.t_ns < t);
    [pos.checked_sub(1), Some(pos)]
        .into_iter()
        .flatten()
        .filter(|&i| i < frames.len())
        .map(|i| ((frames[i].t_ns - t).abs(), i))
        .filter(|&(d, _)| d <= tol)
        .min()
        .map(|(_, i)| i)
}

/// Frames of `a` at which `a` looks into `b`'s face and, in the nearest paired
/// frame of `b`, `b` looks into `a`'s face. Missing gaze or missing boxes
/// count as no contact.
pub fn mutual_gaze_frames(a: &WearerView<'_>, b: &WearerView<'_>, margin_px: f64, tolerance_ns: Nanos) -> Vec<MutualInstant> {
    let mut out = Vec::new();
    for (fa, ga) in a.faces.frames.iter().zip(&a.gaze.frames) {
        let Some(pa) = ga.gaze else { continue };
        let Some(face_b) = fa.face_of(b.wearer_id) else { continue };
        if !gaze_in_box(pa, &face_b, margin_px) {
            continue;
        }
        let Some(j) = nearest_frame(&b.gaze.frames, fa.t_ns, tolerance_ns) else { continue };
        let Some(pb) = b.gaze.frames[j].gaze else { continue };
        let Some(face_a) = b.faces.frames[j].face_of(a.wearer_id) else { continue };
        if gaze_in_box(pb, &face_a, margin_px) {
            out.push(MutualInstant { t_ns: fa.t_ns, frame_a: fa.frame_idx, frame_b: b.faces.frames[j].frame_idx });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EyeContactEvent {
    pub leader: String,
    pub member: String,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub frame_count: usize,
}

/// Group sorted instant times into maximal runs whose neighbours are at most
/// `max_gap_ns` apart, dropping runs shorter than `min_duration_ns`. Returns
/// `(start, end, count)` per kept run.
pub fn group_instants(times: &[Nanos], max_gap_ns: Nanos, min_duration_ns: Nanos) -> Vec<(Nanos, Nanos, usize)> {
    let mut runs: Vec<(Nanos, Nanos, usize)> = Vec::new();
    for &t in times {
        match runs.last_mut() {
            Some(run) if t - run.1 <= max_gap_ns => {
                run.1 = t;
                run.2 += 1;
            }
            _ => runs.push((t, t, 1)),
        }
    }
    runs.retain(|&(s, e, _)| e - s >= min_duration_ns);
    runs
}

pub fn group_events(
    leader: &str,
    member: &str,
    instants: &[MutualInstant],
    max_gap_ms: f64,
    min_duration_ms: f64,
) -> Vec<EyeContactEvent> {
    let times: Vec<Nanos> = instants.iter().map(|i| i.t_ns).collect();
    group_instants(&times, ms_to_ns(max_gap_ms), ms_to_ns(min_duration_ms))
        .into_iter()
        .map(|(start_ns, end_ns, frame_count)| EyeContactEvent {
            leader: leader.to_string(),
            member: member.to_string(),
            start_ns,
            end_ns,
            frame_count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadSummary {
    pub events: usize,
    /// Ungrouped mutual instants, reported next to the event count.
    pub instants: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EyeContactSummary {
    pub per_dyad: BTreeMap<String, DyadSummary>,
    pub total: usize,
    pub events: Vec<EyeContactEvent>,
    pub instants: BTreeMap<String, Vec<MutualInstant>>,
}

/// Per-dyad and total eye-contact event counts for the leader against every
/// member. Members without face tracks are skipped with a warning; a leader
/// without them, or no usable member at all, is an error.
pub fn count_eye_contact(
    leader_id: &str,
    leader: Option<WearerView<'_>>,
    members: &[(String, Option<WearerView<'_>>)],
    params: &EyeContactParams,
) -> Result<EyeContactSummary, EyeContactError> {
    let leader = leader.ok_or_else(|| EyeContactError::MissingFaceTracks { wearer_id: leader_id.to_string() })?;
    let tol = ms_to_ns(params.pairing_tolerance_ms);
    let mut summary = EyeContactSummary::default();
    let mut usable = 0;
    for (member_id, view) in members {
        let Some(view) = view else {
            log::warn!("no face tracks for member `{member_id}`; skipping its dyad");
            continue;
        };
        usable += 1;
        let instants = mutual_gaze_frames(&leader, view, params.margin_px, tol);
        let events = group_events(leader_id, member_id, &instants, params.max_gap_ms, params.min_duration_ms);
        summary.per_dyad.insert(member_id.clone(), DyadSummary { events: events.len(), instants: instants.len() });
        summary.total += events.len();
        summary.events.extend(events);
        summary.instants.insert(member_id.clone(), instants);
    }
    if usable == 0 {
        let ids: Vec<&str> = members.iter().map(|(id, _)| id.as_str()).collect();
        return Err(EyeContactError::MissingFaceTracks {
            wearer_id: if ids.is_empty() { "<no members>".to_string() } else { ids.join(", ") },
        });
    }
    summary.events.sort_by(|a, b| (a.start_ns, &a.member).cmp(&(b.start_ns, &b.member)));
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FramedSample;

    pub(crate) const PERIOD: Nanos = 33_333_333;

    /// A synchronized dyad over `n` frames. `look_a[i]` / `look_b[i]` say whether
    /// that wearer gazes at the other's face in frame i.
    fn dyad(look_a: &[bool], look_b: &[bool]) -> (FaceTrackSet, FramedGaze, FaceTrackSet, FramedGaze) {
        let face = FaceBox { person_id: String::new(), x0: 100.0, y0: 100.0, x1: 140.0, y1: 150.0, conf: 1.0 };
        let build = |owner: &str, other: &str, look: &[bool]| {
            let frames: Vec<FaceFrame> = (0..look.len())
                .map(|i| FaceFrame {
                    frame_idx: i as u64,
                    t_ns: i as Nanos * PERIOD,
                    boxes: vec![FaceBox { person_id: other.to_string(), ..face.clone() }],
                })
                .collect();
            let gaze = FramedGaze {
                frames: look
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| FramedSample {
                        frame_idx: i as u64,
                        t_ns: i as Nanos * PERIOD,
                        sample: Some(i),
                        gaze: Some(if l { Point::new(120.0, 120.0) } else { Point::new(400.0, 400.0) }),
                    })
                    .collect(),
            };
            (FaceTrackSet { video_owner: owner.to_string(), frames }, gaze)
        };
        let (fa, ga) = build("L", "M", look_a);
        let (fb, gb) = build("M", "L", look_b);
        (fa, ga, fb, gb)
    }

    #[test]
    fn box_membership() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert!(gaze_in_box(b.center(), &b, 0.0));
        assert!(!gaze_in_box(Point::new(11.0, 5.0), &b, 0.0));
        assert!(gaze_in_box(Point::new(11.0, 5.0), &b, 2.0));
        assert!(gaze_in_box(Point::new(10.0, 5.0), &b, 0.0));
    }

    #[test]
    fn conjunction_required() {
        let (fa, ga, fb, gb) = dyad(&[true, true, false], &[true, false, true]);
        let a = WearerView { wearer_id: "L", faces: &fa, gaze: &ga };
        let b = WearerView { wearer_id: "M", faces: &fb, gaze: &gb };
        let got = mutual_gaze_frames(&a, &b, 0.0, ms_to_ns(60.0));
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].frame_a, 0);
    }

    #[test]
    fn planted_window_of_twelve_frames() {
        let mut la = vec![false; 60];
        let mut lb = vec![false; 60];
        for i in 20..32 {
            la[i] = true;
            lb[i] = true;
        }
        // one-sided looks around the window must not count
        la[10] = true;
        lb[40] = true;
        let (fa, ga, fb, gb) = dyad(&la, &lb);
        let a = WearerView { wearer_id: "L", faces: &fa, gaze: &ga };
        let b = WearerView { wearer_id: "M", faces: &fb, gaze: &gb };
        let got: Vec<u64> = mutual_gaze_frames(&a, &b, 0.0, ms_to_ns(60.0)).iter().map(|m| m.frame_a).collect();
        // brute-force conjunction
        let expect: Vec<u64> = (0..60).filter(|&i| la[i] && lb[i]).map(|i| i as u64).collect();
        assert_eq!(got, expect);
        assert_eq!(got.len(), 12);
    }

    #[test]
    fn grouping_rules() {
        let times: Vec<Nanos> = (0..10).map(|i| i * PERIOD).collect();
        let g = group_instants(&times, ms_to_ns(100.0), ms_to_ns(100.0));
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].2, 10);

        let mut two: Vec<Nanos> = (0..5).map(|i| i * PERIOD).collect();
        let later = two[4] + ms_to_ns(500.0);
        two.extend((0..5).map(|i| later + i * PERIOD));
        assert_eq!(group_instants(&two, ms_to_ns(100.0), ms_to_ns(100.0)).len(), 2);

        assert!(group_instants(&[1_000], ms_to_ns(100.0), ms_to_ns(100.0)).is_empty());
    }

    #[test]
    fn counting_over_dyads() {
        let (fa, ga, fb, gb) = dyad(&[false; 30], &[false; 30]);
        let a = WearerView { wearer_id: "L", faces: &fa, gaze: &ga };
        let b = WearerView { wearer_id: "M", faces: &fb, gaze: &gb };
        let s = count_eye_contact("L", Some(a), &[("M".into(), Some(b))], &EyeContactParams::default()).unwrap();
        assert_eq!(s.total, 0);
        assert_eq!(
            count_eye_contact("L", None, &[("M".into(), Some(b))], &EyeContactParams::default()).unwrap_err(),
            EyeContactError::MissingFaceTracks { wearer_id: "L".into() }
        );
        assert!(count_eye_contact("L", Some(a), &[("M".into(), None)], &EyeContactParams::default()).is_err());
    }
}
