use std::ops::Range;

use super::{ClassifierParams, ClassifyError, EventKind, EventTimeline, EyeMovementEvent, ThresholdMode};
use crate::ingest::GazeTrack;
use crate::signal::{mad, median, run_speeds, savgol_smooth};
use crate::{ms_to_ns, Nanos, Point};

fn secs(dt: Nanos) -> f64 {
    dt as f64 * 1e-9
}

fn max_interval_ns(track: &GazeTrack, params: &ClassifierParams) -> Nanos {
    (track.meta.nominal_period_ns() as f64 * params.max_interval_periods).round() as Nanos
}

/// Maximal runs of valid samples with no over-long interval inside.
fn valid_runs(track: &GazeTrack, params: &ClassifierParams) -> Vec<Range<usize>> {
    let limit = max_interval_ns(track, params);
    let s = &track.samples;
    let mut runs = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if !s[i].valid {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < s.len() && s[i + 1].valid && s[i + 1].t_ns - s[i].t_ns <= limit {
            i += 1;
        }
        runs.push(start..i + 1);
        i += 1;
    }
    runs
}

fn require_valid(track: &GazeTrack, needed: usize) -> Result<(), ClassifyError> {
    let found = track.valid_count();
    if found < needed {
        return Err(ClassifyError::TooFewSamples { needed, found });
    }
    Ok(())
}

/// Savitzky-Golay smoothing of x and y, independently per valid run. Invalid
/// samples and timestamps are left untouched. With smoothing disabled the track
/// is returned unchanged.
pub fn smooth_gaze(track: &GazeTrack, params: &ClassifierParams) -> Result<GazeTrack, ClassifyError> {
    params.validate()?;
    if !params.smoothing_enabled {
        return Ok(track.clone());
    }
    let window = params.smoothing_window_samples;
    let order = params.smoothing_poly_order;
    require_valid(track, window)?;
    let mut out = track.clone();
    for run in valid_runs(track, params) {
        let xs: Vec<f64> = track.samples[run.clone()].iter().map(|s| s.x).collect();
        let ys: Vec<f64> = track.samples[run.clone()].iter().map(|s| s.y).collect();
        let sx = savgol_smooth(&xs, window, order).map_err(|e| ClassifyError::BadParams(e.to_string()))?;
        let sy = savgol_smooth(&ys, window, order).map_err(|e| ClassifyError::BadParams(e.to_string()))?;
        for (k, i) in run.enumerate() {
            out.samples[i].x = sx[k];
            out.samples[i].y = sy[k];
        }
    }
    Ok(out)
}

/// Per-sample gaze speed: central differences inside each valid run,
/// one-sided at run edges, absent for invalid samples and isolated valid ones.
pub fn compute_velocity(track: &GazeTrack, params: &ClassifierParams) -> Result<Vec<Option<f64>>, ClassifyError> {
    require_valid(track, 2)?;
    let scale = params.unit_scale();
    let mut out = vec![None; track.len()];
    for run in valid_runs(track, params) {
        if run.len() < 2 {
            continue;
        }
        let s = &track.samples[run.clone()];
        let t0 = s[0].t_ns;
        let t: Vec<f64> = s.iter().map(|p| secs(p.t_ns - t0)).collect();
        let x: Vec<f64> = s.iter().map(|p| p.x).collect();
        let y: Vec<f64> = s.iter().map(|p| p.y).collect();
        for (k, v) in run_speeds(&t, &x, &y).into_iter().enumerate() {
            out[run.start + k] = Some(v / scale);
        }
    }
    Ok(out)
}

/// Speed over each interval between consecutive samples (`len - 1` entries);
/// absent when either end is invalid or the interval is over-long.
pub fn interval_speeds(track: &GazeTrack, params: &ClassifierParams) -> Vec<Option<f64>> {
    let limit = max_interval_ns(track, params);
    let scale = params.unit_scale();
    track
        .samples
        .windows(2)
        .map(|w| {
            let dt = w[1].t_ns - w[0].t_ns;
            (w[0].valid && w[1].valid && dt <= limit).then(|| w[0].point().distance(&w[1].point()) / secs(dt) / scale)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    /// First and last sample index; intervals `first..last` belong to it.
    first: usize,
    last: usize,
    kind: EventKind,
}

fn mean_position(track: &GazeTrack, first: usize, last: usize) -> Option<Point> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for s in track.samples[first..=last].iter().filter(|s| s.valid) {
        sx += s.x;
        sy += s.y;
        n += 1;
    }
    (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
}

fn effective_threshold(speeds: &[Option<f64>], params: &ClassifierParams) -> f64 {
    let raw = match params.velocity_threshold_mode {
        ThresholdMode::Fixed => params.fixed_threshold_px_s,
        ThresholdMode::Adaptive => {
            let v: Vec<f64> = speeds.iter().flatten().copied().collect();
            match (median(&v), mad(&v)) {
                (Some(m), Some(d)) => m + params.adaptive_k * d,
                _ => params.fixed_threshold_px_s,
            }
        }
    };
    raw.max(params.threshold_floor_px_s)
}

/// Segment a gaze track into fixation / saccade / other events.
///
/// Steps: optional smoothing, interval speeds, threshold (fixed, or median +
/// k * MAD floored), runs of equally labelled intervals, merging of nearby
/// fixations separated by at most `max_gap_ms`, then relabelling of too-short
/// fixations and too-long saccades as other.
pub fn classify_events(track: &GazeTrack, params: &ClassifierParams) -> Result<EventTimeline, ClassifyError> {
    params.validate()?;
    if track.valid_count() == 0 {
        return Err(ClassifyError::AllInvalid);
    }
    require_valid(track, 2)?;
    let smoothed = smooth_gaze(track, params)?;
    let speeds = interval_speeds(&smoothed, params);
    let threshold = effective_threshold(&speeds, params);
    let t: Vec<Nanos> = smoothed.samples.iter().map(|s| s.t_ns).collect();

    let labels: Vec<EventKind> = speeds
        .iter()
        .map(|s| match s {
            None => EventKind::Other,
            Some(v) if *v > threshold => EventKind::Saccade,
            Some(_) => EventKind::Fixation,
        })
        .collect();

    let mut candidates: Vec<Segment> = Vec::new();
    for (i, &kind) in labels.iter().enumerate() {
        match candidates.last_mut() {
            Some(seg) if seg.kind == kind => seg.last = i + 1,
            _ => candidates.push(Segment { first: i, last: i + 1, kind }),
        }
    }

    let max_gap = ms_to_ns(params.max_gap_ms);
    let radius = params.merge_radius();
    let mut merged: Vec<Segment> = Vec::with_capacity(candidates.len());
    for seg in candidates {
        if seg.kind == EventKind::Fixation {
            if let Some(pos) = merged.iter().rposition(|s| s.kind == EventKind::Fixation) {
                let prev = merged[pos];
                let close_in_time = t[seg.first] - t[prev.last] <= max_gap;
                let close_in_space = match (
                    mean_position(&smoothed, prev.first, prev.last),
                    mean_position(&smoothed, seg.first, seg.last),
                ) {
                    (Some(a), Some(b)) => a.distance(&b) <= radius,
                    _ => false,
                };
                if close_in_time && close_in_space {
                    merged.truncate(pos);
                    merged.push(Segment { first: prev.first, last: seg.last, kind: EventKind::Fixation });
                    continue;
                }
            }
        }
        merged.push(seg);
    }

    let min_fix = ms_to_ns(params.min_fixation_ms);
    let max_sac = ms_to_ns(params.max_saccade_ms);
    let mut segments: Vec<Segment> = Vec::with_capacity(merged.len());
    for mut seg in merged {
        let dur = t[seg.last] - t[seg.first];
        seg.kind = match seg.kind {
            EventKind::Fixation if dur < min_fix => EventKind::Other,
            EventKind::Saccade if dur > max_sac => EventKind::Other,
            k => k,
        };
        match segments.last_mut() {
            Some(prev) if prev.kind == EventKind::Other && seg.kind == EventKind::Other => prev.last = seg.last,
            _ => segments.push(seg),
        }
    }

    let events = segments
        .into_iter()
        .map(|seg| EyeMovementEvent {
            start_ns: t[seg.first],
            end_ns: t[seg.last],
            kind: seg.kind,
            peak_velocity: speeds[seg.first..seg.last].iter().flatten().copied().fold(0.0, f64::max),
            mean_position: mean_position(&smoothed, seg.first, seg.last),
        })
        .collect();

    Ok(EventTimeline { wearer_id: track.wearer_id.clone(), events, params_used: params.clone(), threshold })
}
