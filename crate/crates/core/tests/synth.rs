use std::collections::BTreeMap;

use egolead::conversation::RuleSet;
use egolead::eye_contact::{load_face_tracks, mutual_gaze_frames, group_events, WearerView};
use egolead::gaze_events::{EventKind, EyeMovementEvent};
use egolead::ingest::{load_gaze_track, parse_manifest, FramedGaze};
use egolead::object_fixation::FixationAssignment;
use egolead::synth::*;
use egolead::{ms_to_ns, Category};

fn single_object(duration_s: f64) -> SynthSpec {
    SynthSpec {
        seed: 3,
        session_id: "one".into(),
        duration_s,
        gaze_rate_hz: 10.0,
        frame_rate_hz: 30.0,
        width: 64,
        height: 48,
        noise_px: 0.0,
        saccade_ms: 40.0,
        label_format: LabelFormat::Raster,
        leader_id: "L".into(),
        wearers: vec![SynthWearer {
            wearer_id: "L".into(),
            clock_offset_ns: 5_000,
            objects: vec![SynthObject { id: 1, category: Category::Patient, bbox: [10.0, 10.0, 30.0, 30.0] }],
            faces: BTreeMap::new(),
            planted: vec![Planted::Fixation { start_ms: 0.0, duration_ms: duration_s * 1000.0, target: Target::Object(1) }],
            fill: FillSpec::default(),
        }],
        mutual_windows: vec![],
        utterances: vec![],
        transcript_labels: false,
        human_scores: None,
    }
}

#[test]
fn one_static_fixation() {
    let out = generate_session(&single_object(5.0)).unwrap();
    let ev = &out.truth.events["L"];
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].kind, TruthKind::Fixation);
    assert_eq!((ev[0].start_ns, ev[0].end_ns), (0, 5_000_000_000));
    assert_eq!(ev[0].object_id, Some(1));
    let gaze = &out.files["L_gaze.jsonl"];
    assert_eq!(gaze.lines().count(), 51);
    assert!(gaze.lines().all(|l| l.contains("\"x\":20.0,\"y\":20.0")));
    // device time is session time minus the offset
    assert!(gaze.lines().next().unwrap().starts_with("{\"t_ns\":-5000,"));
    assert!(out.files["L_labels.jsonl"].contains("\"rows\""));
}

#[test]
fn overlapping_segments_are_infeasible() {
    let mut spec = single_object(5.0);
    spec.wearers[0].planted = vec![
        Planted::Fixation { start_ms: 0.0, duration_ms: 1000.0, target: Target::Object(1) },
        Planted::Gap { start_ms: 900.0, duration_ms: 500.0 },
    ];
    assert_eq!(generate_session(&spec).unwrap_err().name(), "InfeasibleScript");
    spec.wearers[0].planted = vec![
        Planted::Fixation { start_ms: 0.0, duration_ms: 1000.0, target: Target::Object(1) },
        Planted::Fixation { start_ms: 1020.0, duration_ms: 500.0, target: Target::Point([50.0, 40.0]) },
    ];
    assert_eq!(generate_session(&spec).unwrap_err().name(), "InfeasibleScript");
    spec.noise_px = -1.0;
    assert_eq!(generate_session(&spec).unwrap_err().name(), "BadSpec");
}

#[test]
fn same_seed_same_bytes() {
    let a = generate_session(&SynthSpec::standard(11, 60.0, 3.0)).unwrap();
    let b = generate_session(&SynthSpec::standard(11, 60.0, 3.0)).unwrap();
    assert_eq!(a.files, b.files);
    let c = generate_session(&SynthSpec::standard(12, 60.0, 3.0)).unwrap();
    assert_ne!(a.files["L_gaze.jsonl"], c.files["L_gaze.jsonl"]);
}

#[test]
fn spec_json_round_trip() {
    let spec = SynthSpec::standard(1, 120.0, 1.0);
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(SynthSpec::from_json_str(&text).unwrap(), spec);
}

#[test]
fn templates_match_bundled_rules() {
    let en = RuleSet::bundled("en").unwrap();
    for label in egolead::conversation::Label::ALL {
        for v in 0..3 {
            for n in 0..3 {
                let text = utterance_template(label, v, n);
                assert_eq!(en.label_text(&text), label, "{text}");
            }
        }
    }
}

/// Truth events can be re-derived from the written gaze: invalid samples in
/// gaps, exact targets during fixations, and motion only across saccades.
#[test]
fn truth_matches_brute_force_rederivation() {
    let spec = SynthSpec::standard(5, 120.0, 0.0);
    let out = generate_session(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write_to(dir.path()).unwrap();
    let mf = parse_manifest(&dir.path().join("manifest.json")).unwrap();
    for w in &mf.manifest.wearers {
        let track = load_gaze_track(&mf.resolve(&w.gaze), &w.wearer_id, w.stream, w.clock_offset_ns).unwrap();
        let s = &track.samples;
        // a sample is "moving" if it lies strictly inside a planted saccade
        for (i, smp) in s.iter().enumerate() {
            let t = smp.t_ns;
            let truth = out.truth.events[&w.wearer_id]
                .iter()
                .find(|e| e.start_ns <= t && (t < e.end_ns || (i + 1 == s.len() && t == e.end_ns)))
                .unwrap();
            match truth.kind {
                TruthKind::Gap => assert!(!smp.valid),
                TruthKind::Fixation => {
                    let [x, y] = truth.point.unwrap();
                    assert!(smp.valid && smp.x == x && smp.y == y);
                }
                TruthKind::Saccade => assert!(smp.valid),
            }
        }
        // an interval between valid samples moves iff it overlaps a planted saccade
        let saccades: Vec<_> =
            out.truth.events[&w.wearer_id].iter().filter(|e| e.kind == TruthKind::Saccade).collect();
        let mut moving_intervals = 0;
        for pair in s.windows(2) {
            if !(pair[0].valid && pair[1].valid) {
                continue;
            }
            let speed = pair[0].point().distance(&pair[1].point()) / ((pair[1].t_ns - pair[0].t_ns) as f64 * 1e-9);
            let moving = speed > 1.0;
            let in_saccade = saccades.iter().any(|e| pair[0].t_ns < e.end_ns && pair[1].t_ns > e.start_ns);
            assert_eq!(moving, in_saccade, "interval at {} ns", pair[0].t_ns);
            moving_intervals += moving as usize;
        }
        assert!(moving_intervals >= saccades.len());
    }
}

/// Brute-force per-frame conjunction over the written face and gaze files
/// finds exactly the planted windows.
#[test]
fn planted_windows_by_brute_force() {
    let spec = SynthSpec::standard(9, 600.0, 0.0);
    assert_eq!(spec.mutual_windows.len(), 11);
    let out = generate_session(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write_to(dir.path()).unwrap();
    let mf = parse_manifest(&dir.path().join("manifest.json")).unwrap();
    let load = |id: &str| {
        let w = mf.manifest.wearer(id).unwrap();
        let track = load_gaze_track(&mf.resolve(&w.gaze), id, w.stream, w.clock_offset_ns).unwrap();
        let faces = load_face_tracks(&mf.resolve(w.facetracks.as_ref().unwrap()), id, w.clock_offset_ns).unwrap();
        let framed = FramedGaze::new(&track, &faces.frame_clock(), ms_to_ns(60.0));
        (faces, framed)
    };
    let (lf, lg) = load("L");
    let mut total = 0;
    for m in ["M1", "M2"] {
        let (mf_, mg) = load(m);
        let a = WearerView { wearer_id: "L", faces: &lf, gaze: &lg };
        let b = WearerView { wearer_id: m, faces: &mf_, gaze: &mg };
        let inst = mutual_gaze_frames(&a, &b, 0.0, ms_to_ns(60.0));
        // brute force: each instant lies in a planted window of this member, give or take one gaze period
        for i in &inst {
            assert!(out.truth.mutual_windows.iter().any(|w| w.member == m
                && w.start_ns - ms_to_ns(100.0) <= i.t_ns
                && i.t_ns <= w.end_ns + ms_to_ns(100.0)));
        }
        total += group_events("L", m, &inst, 100.0, 100.0).len();
    }
    assert_eq!(total, 11);
    assert_eq!(out.truth.ec_total, 11);
}

fn fix(start_s: f64, end_s: f64) -> EyeMovementEvent {
    EyeMovementEvent {
        start_ns: (start_s * 1e9) as i64,
        end_ns: (end_s * 1e9) as i64,
        kind: EventKind::Fixation,
        peak_velocity: 0.0,
        mean_position: None,
    }
}

#[test]
fn scoring_arithmetic() {
    let truth_events: Vec<TruthEvent> = (0..4)
        .map(|i| TruthEvent {
            kind: TruthKind::Fixation,
            start_ns: i * 2_000_000_000,
            end_ns: i * 2_000_000_000 + 1_000_000_000,
            object_id: Some(1),
            category: Some(Category::Patient),
            point: None,
        })
        .collect();
    let truth = GroundTruth {
        session_id: "s".into(),
        leader_id: "L".into(),
        events: BTreeMap::from([("L".to_string(), truth_events)]),
        mutual_windows: vec![],
        ec_per_dyad: BTreeMap::new(),
        ec_total: 0,
        leader_transition: egolead::metrics_report::TransitionMatrix::zeros(Category::ALL.to_vec(), true),
        utterances: vec![],
    };
    let detected = vec![fix(0.0, 1.0), fix(2.05, 3.0), fix(4.0, 5.0)];
    let assigned: Vec<FixationAssignment> = detected
        .iter()
        .enumerate()
        .map(|(i, f)| FixationAssignment {
            fix_idx: i,
            start_ns: f.start_ns,
            end_ns: f.end_ns,
            object_id: if i == 2 { 2 } else { 1 },
            category: Category::Patient,
            support: 1.0,
            votes: 3,
        })
        .collect();
    let inputs = ScoreInputs {
        session_id: "s".into(),
        events: BTreeMap::from([("L".to_string(), detected)]),
        assignments: BTreeMap::from([("L".to_string(), assigned)]),
        ..Default::default()
    };
    let s = score_against_truth(&inputs, &truth, 100.0).unwrap();
    assert_eq!(s.boundary_agreement, 0.75);
    assert_eq!(s.object_accuracy, Some(0.5));
    assert_eq!(s.ec_count_delta, None);

    let other = ScoreInputs { session_id: "t".into(), ..Default::default() };
    assert_eq!(score_against_truth(&other, &truth, 100.0).unwrap_err().name(), "SessionMismatch");
}
