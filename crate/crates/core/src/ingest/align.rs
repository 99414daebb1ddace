//! Nearest-neighbour pairing of gaze samples with video frame instants.

use super::gaze::GazeTrack;
use crate::{Nanos, Point};

/// Default pairing tolerance, about half the 10 Hz gaze period.
pub const DEFAULT_ALIGN_TOLERANCE_NS: Nanos = 60_000_000;

/// For each frame time, the index into `track.samples` of the nearest valid
/// sample within `tolerance_ns`; equidistant candidates resolve to the earlier
/// sample. The output has one entry per frame.
pub fn align_to_frames(track: &GazeTrack, frame_times: &[Nanos], tolerance_ns: Nanos) -> Vec<Option<usize>> {
    let valid: Vec<usize> = track
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.valid)
        .map(|(i, _)| i)
        .collect();
    let times: Vec<Nanos> = valid.iter().map(|&i| track.samples[i].t_ns).collect();
    frame_times
        .iter()
        .map(|&ft| {
            let pos = times.partition_point(|&t| t < ft);
            let mut best: Option<(Nanos, usize)> = None;
            for cand in [pos.checked_sub(1), Some(pos)].into_iter().flatten() {
                if let Some(&t) = times.get(cand) {
                    let d = (t - ft).abs();
                    if d <= tolerance_ns && best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, valid[cand]));
                    }
                }
            }
            best.map(|(_, i)| i)
        })
        .collect()
}

/// Gaze resolved onto one video's frame clock.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedGaze {
    pub frames: Vec<FramedSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramedSample {
    pub frame_idx: u64,
    pub t_ns: Nanos,
    /// Index into the source track's samples.
    pub sample: Option<usize>,
    pub gaze: Option<Point>,
}

impl FramedGaze {
    /// `frames` are `(frame_idx, t_ns)` pairs in increasing time.
    pub fn new(track: &GazeTrack, frames: &[(u64, Nanos)], tolerance_ns: Nanos) -> Self {
        let times: Vec<Nanos> = frames.iter().map(|f| f.1).collect();
        let idx = align_to_frames(track, &times, tolerance_ns);
        Self {
            frames: frames
                .iter()
                .zip(idx)
                .map(|(&(frame_idx, t_ns), sample)| FramedSample {
                    frame_idx,
                    t_ns,
                    sample,
                    gaze: sample.map(|i| track.samples[i].point()),
                })
                .collect(),
        }
    }

    /// Positions of the frames whose time lies in `[start_ns, end_ns]`.
    pub fn range(&self, start_ns: Nanos, end_ns: Nanos) -> std::ops::Range<usize> {
        let a = self.frames.partition_point(|f| f.t_ns < start_ns);
        let b = self.frames.partition_point(|f| f.t_ns <= end_ns);
        a..b.max(a)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{RawGazeRecord, StreamMeta};

    fn track(times: &[Nanos]) -> GazeTrack {
        let meta = StreamMeta { width: 100, height: 100, nominal_rate_hz: 10.0, frame_count: 0 };
        GazeTrack::from_raw(
            "w",
            meta,
            times.iter().map(|&t| RawGazeRecord { t_ns: t, x: 1.0, y: 1.0, conf: None }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_hit() {
        let tr = track(&[0, 100_000_000]);
        assert_eq!(align_to_frames(&tr, &[100_000_000], 0), vec![Some(1)]);
    }

    #[test]
    fn beyond_tolerance_is_absent() {
        let tr = track(&[0]);
        assert_eq!(align_to_frames(&tr, &[200_000_000], 60_000_000), vec![None]);
    }

    #[test]
    fn invalid_samples_are_skipped() {
        let mut tr = track(&[0, 10, 20]);
        tr.samples[1].valid = false;
        assert_eq!(align_to_frames(&tr, &[11], 100), vec![Some(2)]);
    }

    #[test]
    fn ties_prefer_earlier_sample() {
        let tr = track(&[0, 20]);
        assert_eq!(align_to_frames(&tr, &[10], 100), vec![Some(0)]);
    }

    #[test]
    fn framed_gaze_carries_points_and_ranges() {
        let tr = track(&[0, 100]);
        let fg = FramedGaze::new(&tr, &[(0, 0), (1, 50), (2, 100), (3, 400)], 60);
        assert_eq!(fg.frames[1].sample, Some(0));
        assert_eq!(fg.frames[3].gaze, None);
        assert_eq!(fg.range(40, 100), 1..3);
        assert_eq!(fg.range(500, 600), 4..4);
    }

    #[test]
    fn empty_track_gives_all_absent() {
        let mut tr = track(&[0]);
        tr.samples[0].valid = false;
        assert_eq!(align_to_frames(&tr, &[0, 5], 100), vec![None, None]);
    }
}
