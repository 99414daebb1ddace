use egolead::gaze_events::{classify_events, ClassifierParams, EventKind, EventTimeline, ThresholdMode};
use egolead::ingest::{GazeTrack, RawGazeRecord, StreamMeta};
use egolead::signal::{run_speeds, savgol_smooth, savgol_weights};
use egolead::Nanos;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Script {
    rate_hz: f64,
    /// (x, y, samples, invalid) per dwell
    dwells: Vec<(f64, f64, usize, bool)>,
    jitter: Vec<(f64, f64)>,
}

fn script() -> impl Strategy<Value = Script> {
    (
        prop::sample::select(vec![10.0, 30.0, 60.0]),
        prop::collection::vec((0.0..350.0f64, 0.0..350.0f64, 1usize..25, prop::bool::weighted(0.1)), 2..20),
        prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 500),
    )
        .prop_map(|(rate_hz, dwells, jitter)| Script { rate_hz, dwells, jitter })
}

fn track(s: &Script, t0: Nanos, scale: f64) -> GazeTrack {
    let period = (1e9 / s.rate_hz).round() as Nanos;
    let mut recs = Vec::new();
    for &(x, y, n, invalid) in &s.dwells {
        for _ in 0..n {
            let (jx, jy) = s.jitter[recs.len() % s.jitter.len()];
            let (x, y) = if invalid { (-1.0, -1.0) } else { ((x + jx) * scale, (y + jy) * scale) };
            recs.push(RawGazeRecord { t_ns: t0 + recs.len() as Nanos * period, x, y, conf: None });
        }
    }
    let meta = StreamMeta { width: 1408, height: 1408, nominal_rate_hz: s.rate_hz, frame_count: 0 };
    GazeTrack::from_raw("w", meta, recs).unwrap()
}

fn params_for(s: &Script) -> ClassifierParams {
    if s.rate_hz < 30.0 {
        ClassifierParams::low_rate()
    } else {
        ClassifierParams::default()
    }
}

fn shape(t: &EventTimeline, shift: Nanos) -> Vec<(Nanos, Nanos, EventKind, u64)> {
    t.events.iter().map(|e| (e.start_ns - shift, e.end_ns - shift, e.kind, e.peak_velocity.to_bits())).collect()
}

fn fixation_ns(t: &EventTimeline) -> Nanos {
    t.events.iter().filter(|e| e.kind == EventKind::Fixation).map(|e| e.duration_ns()).sum()
}

/// Least-squares weights from the pseudo-inverse of the Vandermonde matrix.
fn savgol_oracle(window: usize, order: usize, at: isize) -> Vec<f64> {
    let h = (window / 2) as isize;
    let a = DMatrix::from_fn(window, order + 1, |r, c| ((r as isize - h) as f64).powi(c as i32));
    let pinv = (a.transpose() * &a).try_inverse().unwrap() * a.transpose();
    let e = DVector::from_fn(order + 1, |c, _| (at as f64).powi(c as i32));
    (e.transpose() * pinv).iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shifting_time_shifts_events(s in script(), delta in -1_000_000_000_000i64..1_000_000_000_000) {
        let p = params_for(&s);
        let base = classify_events(&track(&s, 0, 1.0), &p);
        let moved = classify_events(&track(&s, delta, 1.0), &p);
        match (base, moved) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.threshold.to_bits(), b.threshold.to_bits());
                prop_assert_eq!(shape(&a, 0), shape(&b, delta));
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn every_valid_sample_lies_in_one_event(s in script()) {
        let tr = track(&s, 0, 1.0);
        let Ok(tl) = classify_events(&tr, &params_for(&s)) else { return Ok(()) };
        for w in tl.events.windows(2) {
            prop_assert_eq!(w[0].end_ns, w[1].start_ns);
        }
        let last = tl.events.len() - 1;
        for smp in tr.samples.iter().filter(|x| x.valid) {
            let hits = tl
                .events
                .iter()
                .enumerate()
                .filter(|(i, e)| e.start_ns <= smp.t_ns && (smp.t_ns < e.end_ns || (*i == last && smp.t_ns == e.end_ns)))
                .count();
            prop_assert_eq!(hits, 1, "t = {}", smp.t_ns);
        }
    }

    #[test]
    fn higher_fixed_threshold_keeps_fixation_time(s in script(), lo in 5.0..400.0f64, extra in 0.0..400.0f64) {
        let tr = track(&s, 0, 1.0);
        let p = |thr: f64| ClassifierParams {
            velocity_threshold_mode: ThresholdMode::Fixed,
            fixed_threshold_px_s: thr,
            threshold_floor_px_s: 0.0,
            max_gap_ms: 0.0,
            ..params_for(&s)
        };
        if let (Ok(a), Ok(b)) = (classify_events(&tr, &p(lo)), classify_events(&tr, &p(lo + extra))) {
            prop_assert!(fixation_ns(&b) >= fixation_ns(&a));
        }
    }

    #[test]
    fn uniform_scaling_keeps_segmentation(s in script(), k in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0])) {
        let p = |scale: f64| {
            let base = params_for(&s);
            ClassifierParams { threshold_floor_px_s: 0.0, merge_radius_px: base.merge_radius_px * scale, ..base }
        };
        let a = classify_events(&track(&s, 0, 1.0), &p(1.0));
        let b = classify_events(&track(&s, 0, k), &p(k));
        if let (Ok(a), Ok(b)) = (a, b) {
            let kinds = |t: &EventTimeline| t.events.iter().map(|e| (e.start_ns, e.end_ns, e.kind)).collect::<Vec<_>>();
            prop_assert_eq!(kinds(&a), kinds(&b));
            prop_assert_eq!(a.threshold * k, b.threshold);
        }
    }

    #[test]
    fn savgol_weights_match_least_squares(half in 1usize..8, order in 0usize..6, at_frac in -1.0..=1.0f64) {
        let window = 2 * half + 1;
        prop_assume!(window >= order + 2);
        let at = (at_frac * half as f64).round() as isize;
        let w: Vec<f64> = savgol_weights(window, order, at).unwrap();
        for (a, b) in w.iter().zip(savgol_oracle(window, order, at)) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let w32: Vec<f32> = savgol_weights(window, order, at).unwrap();
        for (a, b) in w32.iter().zip(&w) {
            prop_assert!((*a as f64 - b).abs() < 1e-3);
        }
    }

    #[test]
    fn savgol_keeps_low_degree_polynomials(
        coef in prop::collection::vec(-3.0..3.0f64, 1..4),
        n in 9usize..40,
    ) {
        let order = coef.len() - 1;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let u = i as f64 / 10.0;
                coef.iter().rev().fold(0.0, |acc, c| acc * u + c)
            })
            .collect();
        let out = savgol_smooth(&xs, 7, order.max(2)).unwrap();
        for (a, b) in out.iter().zip(&xs) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn speeds_match_finite_differences(
        pts in prop::collection::vec((0.0..1000.0f64, 0.0..1000.0f64, 1.0..200.0f64), 2..30),
    ) {
        let mut t = vec![0.0];
        for p in &pts[1..] {
            t.push(t.last().unwrap() + p.2 / 1000.0);
        }
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let v = run_speeds(&t, &x, &y);
        let n = t.len();
        for i in 0..n {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            let want = ((x[b] - x[a]).powi(2) + (y[b] - y[a]).powi(2)).sqrt() / (t[b] - t[a]);
            prop_assert!((v[i] - want).abs() <= 1e-9 * want.max(1.0));
        }
    }
}
