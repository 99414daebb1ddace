use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use egolead::ingest::{align_to_frames, parse_manifest_str, GazeTrack, RawGazeRecord, Role, SessionManifest, StreamMeta, WearerEntry};
use egolead::{Category, Nanos};
use proptest::prelude::*;

fn manifest() -> impl Strategy<Value = SessionManifest> {
    let wearer = (-5_000_000_000i64..5_000_000_000, any::<[bool; 3]>(), 1u32..4000, 1u32..4000, 1.0..240.0f64);
    (
        "[a-z0-9-]{1,12}",
        0i64..i64::MAX / 4,
        prop::collection::btree_map(1u32..40, prop::sample::select(Category::ALL[..4].to_vec()), 0..8),
        prop::collection::vec(wearer, 1..5),
        prop::option::of(prop::collection::btree_map("[A-Za-z]{1,8}", "[0-9.]{1,4}", 0..3)),
    )
        .prop_map(|(session_id, epoch_ns, category_map, ws, human_scores)| {
            let wearers: Vec<WearerEntry> = ws
                .into_iter()
                .enumerate()
                .map(|(i, (offset, has, w, h, rate))| {
                    let file = |kind: &str| PathBuf::from(format!("w{i}_{kind}.jsonl"));
                    WearerEntry {
                        wearer_id: format!("W{i}"),
                        role: if i == 0 { Role::Leader } else { Role::Member },
                        clock_offset_ns: offset,
                        gaze: file("gaze"),
                        labelmaps: has[0].then(|| file("labels")),
                        facetracks: has[1].then(|| file("faces")),
                        transcript: has[2].then(|| file("transcript")),
                        stream: StreamMeta { width: w, height: h, nominal_rate_hz: rate, frame_count: 0 },
                    }
                })
                .collect();
            SessionManifest {
                session_id,
                epoch_ns,
                leader_id: "W0".into(),
                category_map,
                wearers,
                notes: String::new(),
                human_scores,
            }
        })
}

fn raw_track() -> impl Strategy<Value = Vec<RawGazeRecord>> {
    prop::collection::btree_set(0i64..2_000_000, 1..60).prop_flat_map(|ts| {
        let n = ts.len();
        (Just(ts), prop::collection::vec((-50.0..1500.0f64, -50.0..1500.0f64), n)).prop_map(|(ts, xy)| {
            ts.into_iter()
                .zip(xy)
                .map(|(t, (x, y))| RawGazeRecord { t_ns: t * 1000, x, y, conf: None })
                .collect()
        })
    })
}

fn load(recs: &[RawGazeRecord], offset: Nanos) -> GazeTrack {
    let numbered = recs.iter().cloned().enumerate().map(|(i, r)| (i + 1, r)).collect();
    GazeTrack::from_records("w", StreamMeta::default(), offset, numbered, Path::new("mem")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn manifest_survives_serialization(m in manifest()) {
        let back = parse_manifest_str(&m.to_json_string(), Path::new("m.json")).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn clock_offset_is_a_pure_shift(
        recs in raw_track(),
        offset in -10_000_000_000i64..10_000_000_000,
        queries in prop::collection::vec(-100_000_000i64..2_100_000_000, 1..40),
        tol in 0i64..100_000_000,
    ) {
        let raw = load(&recs, 0);
        let moved = load(&recs, offset);
        let shifted_q: Vec<Nanos> = queries.iter().map(|q| q + offset).collect();
        prop_assert_eq!(align_to_frames(&moved, &shifted_q, tol), align_to_frames(&raw, &queries, tol));
        for (a, b) in moved.samples.iter().zip(&raw.samples) {
            prop_assert_eq!(a.t_ns, b.t_ns + offset);
            prop_assert_eq!(a.valid, b.valid);
        }
    }

    #[test]
    fn alignment_is_total_and_nearest(
        recs in raw_track(),
        frames in prop::collection::vec(0i64..2_100_000_000, 0..50),
        tol in 0i64..100_000_000,
    ) {
        let tr = load(&recs, 0);
        let out = align_to_frames(&tr, &frames, tol);
        prop_assert_eq!(out.len(), frames.len());
        prop_assert_eq!(&out, &align_to_frames(&tr, &frames, tol));
        for (&ft, got) in frames.iter().zip(&out) {
            // brute force: earliest valid sample at the smallest distance within tolerance
            let best = tr
                .samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.valid && (s.t_ns - ft).abs() <= tol)
                .min_by_key(|(i, s)| ((s.t_ns - ft).abs(), *i))
                .map(|(i, _)| i);
            prop_assert_eq!(*got, best);
        }
    }
}

#[test]
fn category_map_keys_are_strings_on_disk() {
    let m = SessionManifest {
        session_id: "s".into(),
        epoch_ns: 0,
        leader_id: "L".into(),
        category_map: BTreeMap::from([(3, Category::Screen)]),
        wearers: vec![WearerEntry {
            wearer_id: "L".into(),
            role: Role::Leader,
            clock_offset_ns: 0,
            gaze: "g.jsonl".into(),
            labelmaps: None,
            facetracks: None,
            transcript: None,
            stream: StreamMeta::default(),
        }],
        notes: String::new(),
        human_scores: None,
    };
    assert!(m.to_json_string().contains("\"3\": \"screen\""));
}
