use std::collections::BTreeSet;

use egolead::eye_contact::{group_instants, mutual_gaze_frames, FaceBox, FaceFrame, FaceTrackSet, WearerView};
use egolead::ingest::{FramedGaze, FramedSample};
use egolead::{Nanos, Point};
use proptest::prelude::*;

const FRAME_NS: Nanos = 33_333_333;
const N: usize = 40;

#[derive(Debug, Clone)]
struct Stream {
    faces: FaceTrackSet,
    gaze: FramedGaze,
}

fn face(person: &str) -> impl Strategy<Value = Option<FaceBox>> {
    let person = person.to_string();
    prop::option::weighted(0.8, (0.0..80.0f64, 0.0..80.0f64, 5.0..40.0f64, 5.0..40.0f64)).prop_map(move |b| {
        b.map(|(x, y, w, h)| FaceBox { person_id: person.clone(), x0: x, y0: y, x1: x + w, y1: y + h, conf: 1.0 })
    })
}

/// Frames owned by `owner` that may show `other`'s face, with gaze that lands
/// inside that face about half the time.
fn stream(owner: &'static str, other: &'static str) -> impl Strategy<Value = Stream> {
    prop::collection::vec((face(other), any::<bool>(), 0.0..120.0f64, 0.0..120.0f64, 0.0..1.0f64), N).prop_map(
        move |rows| {
            let mut frames = Vec::new();
            let mut gaze = Vec::new();
            for (i, (f, aim, gx, gy, miss)) in rows.into_iter().enumerate() {
                let t = i as Nanos * FRAME_NS;
                let p = match (&f, aim) {
                    (Some(b), true) => Some(Point::new((b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0)),
                    _ if miss < 0.1 => None,
                    _ => Some(Point::new(gx, gy)),
                };
                frames.push(FaceFrame { frame_idx: i as u64, t_ns: t, boxes: f.into_iter().collect() });
                gaze.push(FramedSample { frame_idx: i as u64, t_ns: t, sample: p.map(|_| i), gaze: p });
            }
            Stream { faces: FaceTrackSet { video_owner: owner.into(), frames }, gaze: FramedGaze { frames: gaze } }
        },
    )
}

fn view<'a>(id: &'a str, s: &'a Stream) -> WearerView<'a> {
    WearerView { wearer_id: id, faces: &s.faces, gaze: &s.gaze }
}

fn pairs(a: &Stream, b: &Stream, margin: f64, swap: bool) -> BTreeSet<(u64, u64)> {
    if swap {
        mutual_gaze_frames(&view("B", b), &view("A", a), margin, 20_000_000)
            .into_iter()
            .map(|m| (m.frame_b, m.frame_a))
            .collect()
    } else {
        mutual_gaze_frames(&view("A", a), &view("B", b), margin, 20_000_000)
            .into_iter()
            .map(|m| (m.frame_a, m.frame_b))
            .collect()
    }
}

fn times() -> impl Strategy<Value = Vec<Nanos>> {
    prop::collection::btree_set(0i64..300, 0..60).prop_map(|s| s.into_iter().map(|i| i * FRAME_NS).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn swapping_dyad_roles_keeps_instants(a in stream("A", "B"), b in stream("B", "A"), margin in 0.0..10.0f64) {
        prop_assert_eq!(pairs(&a, &b, margin, false), pairs(&a, &b, margin, true));
    }

    #[test]
    fn wider_margin_never_loses_instants(a in stream("A", "B"), b in stream("B", "A"), m in 0.0..10.0f64, extra in 0.0..20.0f64) {
        let narrow = pairs(&a, &b, m, false);
        let wide = pairs(&a, &b, m + extra, false);
        prop_assert!(narrow.is_subset(&wide));
    }

    #[test]
    fn larger_gap_never_adds_events(t in times(), g in 0i64..200, extra in 0i64..200) {
        let gap = |ms: i64| ms * 1_000_000;
        let few = group_instants(&t, gap(g + extra), 0);
        let many = group_instants(&t, gap(g), 0);
        prop_assert!(few.len() <= many.len());
    }

    #[test]
    fn grouped_frames_bounded_by_instants(t in times(), g in 0i64..200, min in 0i64..300) {
        let filtered = group_instants(&t, g * 1_000_000, min * 1_000_000);
        let kept: usize = filtered.iter().map(|e| e.2).sum();
        prop_assert!(kept <= t.len());
        let all = group_instants(&t, g * 1_000_000, 0);
        prop_assert_eq!(all.iter().map(|e| e.2).sum::<usize>(), t.len());
        for (s, e, n) in filtered {
            prop_assert!(s <= e && n >= 1 && e - s >= min * 1_000_000);
        }
    }
}
