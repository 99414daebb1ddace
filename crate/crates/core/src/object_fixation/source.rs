//! Per-frame object label sources: run-length-encoded rasters and prioritized
//! box tracks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::LabelError;
use crate::category::{Category, CategoryPriority};
use crate::ingest::{jsonl, IngestError, StreamMeta};
use crate::{BBox, Nanos, Point};

/// One decoded raster frame. Runs are kept as `(label, end_col_exclusive)` per
/// row for logarithmic lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelFrame {
    pub frame_idx: u64,
    pub t_ns: Nanos,
    pub width: u32,
    pub height: u32,
    rows: Vec<Vec<(u32, u32)>>,
}

impl LabelFrame {
    /// Build from `[label, run_length]` rows. Returns a description of the first
    /// structural problem instead of a frame when the runs do not tile the grid.
    pub fn from_runs(
        frame_idx: u64,
        t_ns: Nanos,
        width: u32,
        height: u32,
        rows: &[Vec<[u32; 2]>],
    ) -> Result<Self, RunProblem> {
        if rows.len() != height as usize {
            return Err(RunProblem::RowCount { got: rows.len() });
        }
        let mut out = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let mut end: u64 = 0;
            let mut runs = Vec::with_capacity(row.len());
            for &[label, len] in row {
                if len == 0 {
                    return Err(RunProblem::ZeroRun { row: r });
                }
                end += len as u64;
                if end > width as u64 {
                    let total = row.iter().map(|x| x[1] as u64).sum();
                    return Err(RunProblem::Overflow { row: r, got: total });
                }
                runs.push((label, end as u32));
            }
            if end < width as u64 {
                return Err(RunProblem::Underflow { row: r, got: end });
            }
            out.push(runs);
        }
        Ok(Self { frame_idx, t_ns, width, height, rows: out })
    }

    /// Label of the cell under `p`; the point must lie in `[0, W) x [0, H)`.
    pub fn label_at(&self, p: Point) -> Result<u32, LabelError> {
        if !(p.x >= 0.0 && p.x < self.width as f64 && p.y >= 0.0 && p.y < self.height as f64) {
            return Err(LabelError::PointOutOfBounds { x: p.x, y: p.y });
        }
        let row = &self.rows[p.y.floor() as usize];
        let col = p.x.floor() as u32;
        let k = row.partition_point(|&(_, end)| end <= col);
        Ok(row[k].0)
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().flatten().map(|&(l, _)| l)
    }

    /// Back to `[label, run_length]` rows.
    pub fn to_runs(&self) -> Vec<Vec<[u32; 2]>> {
        self.rows
            .iter()
            .map(|row| {
                let mut prev = 0;
                row.iter()
                    .map(|&(label, end)| {
                        let len = end - prev;
                        prev = end;
                        [label, len]
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunProblem {
    RowCount { got: usize },
    ZeroRun { row: usize },
    Underflow { row: usize, got: u64 },
    Overflow { row: usize, got: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMapSequence {
    pub frames: Vec<LabelFrame>,
    pub n_objects: u32,
    /// Free-form origin note (segmenter, prompt boxes).
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxFrame {
    pub frame_idx: u64,
    pub t_ns: Nanos,
    pub boxes: Vec<(u32, BBox)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxTrackLabelSource {
    pub frames: Vec<BoxFrame>,
    /// Object ids, highest priority first.
    pub priority: Vec<u32>,
    pub width: u32,
    pub height: u32,
}

impl BoxTrackLabelSource {
    fn label_in(&self, frame: &BoxFrame, p: Point) -> Result<u32, LabelError> {
        if !(p.x >= 0.0 && p.x < self.width as f64 && p.y >= 0.0 && p.y < self.height as f64) {
            return Err(LabelError::PointOutOfBounds { x: p.x, y: p.y });
        }
        for id in &self.priority {
            if frame.boxes.iter().any(|(oid, b)| oid == id && b.contains_half_open(p)) {
                return Ok(*id);
            }
        }
        Ok(0)
    }

    /// Rasterize every frame, sampling each cell at its top-left corner.
    pub fn render(&self, n_objects: u32, provenance: &str) -> LabelMapSequence {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let rows: Vec<Vec<[u32; 2]>> = (0..self.height)
                    .map(|r| {
                        let mut runs: Vec<[u32; 2]> = Vec::new();
                        for c in 0..self.width {
                            let l = self
                                .label_in(f, Point::new(c as f64, r as f64))
                                .expect("cell corners are in bounds");
                            match runs.last_mut() {
                                Some(last) if last[0] == l => last[1] += 1,
                                _ => runs.push([l, 1]),
                            }
                        }
                        runs
                    })
                    .collect();
                LabelFrame::from_runs(f.frame_idx, f.t_ns, self.width, self.height, &rows)
                    .expect("rendered rows tile the frame")
            })
            .collect();
        LabelMapSequence { frames, n_objects, provenance: provenance.to_string() }
    }
}

/// Either kind of per-frame label source.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource {
    Raster(LabelMapSequence),
    Boxes(BoxTrackLabelSource),
}

impl LabelSource {
    pub fn frame_count(&self) -> usize {
        match self {
            LabelSource::Raster(s) => s.frames.len(),
            LabelSource::Boxes(s) => s.frames.len(),
        }
    }

    /// `(frame_idx, t_ns)` of every frame, in order.
    pub fn frame_clock(&self) -> Vec<(u64, Nanos)> {
        match self {
            LabelSource::Raster(s) => s.frames.iter().map(|f| (f.frame_idx, f.t_ns)).collect(),
            LabelSource::Boxes(s) => s.frames.iter().map(|f| (f.frame_idx, f.t_ns)).collect(),
        }
    }

    fn position_of(&self, frame_idx: u64) -> Option<usize> {
        let pos = match self {
            LabelSource::Raster(s) => s.frames.binary_search_by_key(&frame_idx, |f| f.frame_idx),
            LabelSource::Boxes(s) => s.frames.binary_search_by_key(&frame_idx, |f| f.frame_idx),
        };
        pos.ok()
    }

    pub fn frame_size(&self, pos: usize) -> (u32, u32) {
        match self {
            LabelSource::Raster(s) => (s.frames[pos].width, s.frames[pos].height),
            LabelSource::Boxes(s) => (s.width, s.height),
        }
    }

    /// Object id under `point` in frame `frame_idx`; 0 is background.
    pub fn label_at(&self, frame_idx: u64, point: Point) -> Result<u32, LabelError> {
        let pos = self.position_of(frame_idx).ok_or(LabelError::FrameMissing { frame_idx })?;
        self.label_at_position(pos, point)
    }

    /// As [`label_at`](Self::label_at) but addressed by position in the sequence.
    pub fn label_at_position(&self, pos: usize, point: Point) -> Result<u32, LabelError> {
        match self {
            LabelSource::Raster(s) => s
                .frames
                .get(pos)
                .ok_or(LabelError::FrameMissing { frame_idx: pos as u64 })?
                .label_at(point),
            LabelSource::Boxes(s) => {
                let f = s.frames.get(pos).ok_or(LabelError::FrameMissing { frame_idx: pos as u64 })?;
                s.label_in(f, point)
            }
        }
    }
}

/// Box draw order derived from category priority, then ascending object id.
pub fn default_box_priority(category_map: &BTreeMap<u32, Category>, priority: &CategoryPriority) -> Vec<u32> {
    let mut ids: Vec<u32> = category_map.keys().copied().collect();
    ids.sort_by_key(|id| (priority.rank(category_map[id]), *id));
    ids
}

/// Check that an explicit box priority is a permutation of the mapped object ids.
pub fn check_box_priority(order: &[u32], category_map: &BTreeMap<u32, Category>) -> Result<(), IngestError> {
    let given: BTreeSet<u32> = order.iter().copied().collect();
    let mapped: BTreeSet<u32> = category_map.keys().copied().collect();
    if given.len() != order.len() || given != mapped {
        return Err(IngestError::BadPriority {
            reason: format!("{order:?} is not a permutation of object ids {mapped:?}"),
        });
    }
    Ok(())
}

/// What a label file is checked against while loading.
#[derive(Debug, Clone)]
pub struct LabelContext<'a> {
    pub category_map: &'a BTreeMap<u32, Category>,
    pub meta: StreamMeta,
    pub clock_offset_ns: Nanos,
    pub box_priority: Vec<u32>,
}

#[derive(Debug, Deserialize)]
struct RasterRecord {
    frame_idx: u64,
    t_ns: Nanos,
    w: u32,
    h: u32,
    rows: Vec<Vec<[u32; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxRecordEntry {
    object_id: u32,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxRecord {
    frame_idx: u64,
    t_ns: Nanos,
    boxes: Vec<BoxRecordEntry>,
}

/// Raster frame in its file form.
#[derive(Debug, Serialize)]
pub struct RasterRecordOut<'a> {
    pub frame_idx: u64,
    pub t_ns: Nanos,
    pub w: u32,
    pub h: u32,
    pub rows: &'a [Vec<[u32; 2]>],
}

impl LabelMapSequence {
    /// Serialize in the label-map JSON Lines form, with `t_ns` moved back to
    /// device time by subtracting `clock_offset_ns`.
    pub fn to_jsonl(&self, clock_offset_ns: Nanos) -> String {
        let mut out = String::new();
        for f in &self.frames {
            let runs = f.to_runs();
            let rec = RasterRecordOut { frame_idx: f.frame_idx, t_ns: f.t_ns - clock_offset_ns, w: f.width, h: f.height, rows: &runs };
            out.push_str(&serde_json::to_string(&rec).expect("raster record serializes"));
            out.push('\n');
        }
        out
    }
}

impl BoxTrackLabelSource {
    /// Serialize in the box-track JSON Lines form (device time).
    pub fn to_jsonl(&self, clock_offset_ns: Nanos) -> String {
        let recs: Vec<BoxRecord> = self
            .frames
            .iter()
            .map(|f| BoxRecord {
                frame_idx: f.frame_idx,
                t_ns: f.t_ns - clock_offset_ns,
                boxes: f
                    .boxes
                    .iter()
                    .map(|(id, b)| BoxRecordEntry { object_id: *id, x0: b.x0, y0: b.y0, x1: b.x1, y1: b.y1 })
                    .collect(),
            })
            .collect();
        jsonl::to_string(&recs)
    }
}

enum Parsed {
    Raster(LabelFrame),
    Boxes(BoxFrame),
}

fn parse_line(path: &Path, line: usize, text: &str, ctx: &LabelContext<'_>) -> Result<Parsed, IngestError> {
    let value: Value = jsonl::parse_record(path, line, text)?;
    let known = |id: u32| id == 0 || ctx.category_map.contains_key(&id);
    let shift = |t: Nanos| {
        t.checked_add(ctx.clock_offset_ns).ok_or_else(|| IngestError::BadRecord {
            path: path.to_path_buf(),
            line,
            reason: "timestamp overflows after clock offset".into(),
        })
    };
    if value.get("rows").is_some() {
        let rec: RasterRecord = serde_json::from_value(value).map_err(|e| IngestError::BadRecord {
            path: path.to_path_buf(),
            line,
            reason: e.to_string(),
        })?;
        if rec.w != ctx.meta.width || rec.h != ctx.meta.height {
            return Err(IngestError::BadRecord {
                path: path.to_path_buf(),
                line,
                reason: format!(
                    "frame is {}x{} but the stream is {}x{}",
                    rec.w, rec.h, ctx.meta.width, ctx.meta.height
                ),
            });
        }
        let frame = LabelFrame::from_runs(rec.frame_idx, shift(rec.t_ns)?, rec.w, rec.h, &rec.rows).map_err(|p| {
            let path = path.to_path_buf();
            match p {
                RunProblem::RowCount { got } => IngestError::RowCount { path, line, expected: rec.h, got },
                RunProblem::ZeroRun { row } => {
                    IngestError::BadRecord { path, line, reason: format!("zero-length run in row {row}") }
                }
                RunProblem::Underflow { row, got } => IngestError::RleUnderflow { path, line, row, got, width: rec.w },
                RunProblem::Overflow { row, got } => IngestError::RleOverflow { path, line, row, got, width: rec.w },
            }
        })?;
        if let Some(bad) = frame.labels().find(|&l| !known(l)) {
            return Err(IngestError::UnknownObjectId { path: path.to_path_buf(), line, object_id: bad });
        }
        Ok(Parsed::Raster(frame))
    } else if value.get("boxes").is_some() {
        let rec: BoxRecord = serde_json::from_value(value).map_err(|e| IngestError::BadRecord {
            path: path.to_path_buf(),
            line,
            reason: e.to_string(),
        })?;
        let mut boxes = Vec::with_capacity(rec.boxes.len());
        for b in rec.boxes {
            if b.object_id == 0 || !known(b.object_id) {
                return Err(IngestError::UnknownObjectId { path: path.to_path_buf(), line, object_id: b.object_id });
            }
            if boxes.iter().any(|(id, _)| *id == b.object_id) {
                return Err(IngestError::BadRecord {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("object {} boxed twice", b.object_id),
                });
            }
            let bbox = BBox::new(b.x0, b.y0, b.x1, b.y1);
            let clamped = bbox.clamp_to(ctx.meta.width as f64, ctx.meta.height as f64);
            if !bbox.is_valid() || !clamped.is_valid() {
                return Err(IngestError::DegenerateBox { path: path.to_path_buf(), line });
            }
            boxes.push((b.object_id, clamped));
        }
        Ok(Parsed::Boxes(BoxFrame { frame_idx: rec.frame_idx, t_ns: shift(rec.t_ns)?, boxes }))
    } else {
        Err(IngestError::BadRecord {
            path: path.to_path_buf(),
            line,
            reason: "record has neither `rows` nor `boxes`".into(),
        })
    }
}

/// Parse a label-map file, pushing every violation into `sink`. Returns the
/// source only when no violation was found.
pub fn parse_label_source(path: &Path, ctx: &LabelContext<'_>, sink: &mut Vec<IngestError>) -> Option<LabelSource> {
    let before = sink.len();
    let lines = match jsonl::read_lines(path) {
        Ok(l) => l,
        Err(e) => {
            sink.push(e);
            return None;
        }
    };
    if lines.is_empty() {
        sink.push(IngestError::EmptyStream { path: path.to_path_buf() });
        return None;
    }
    let mut rasters = Vec::new();
    let mut box_frames = Vec::new();
    let mut last: Option<(Nanos, u64)> = None;
    for (line, text) in &lines {
        match parse_line(path, *line, text, ctx) {
            Ok(parsed) => {
                let (t, idx) = match &parsed {
                    Parsed::Raster(f) => (f.t_ns, f.frame_idx),
                    Parsed::Boxes(f) => (f.t_ns, f.frame_idx),
                };
                if let Some((pt, pidx)) = last {
                    if t <= pt || idx <= pidx {
                        sink.push(IngestError::NonMonotonicTimestamps { path: path.to_path_buf(), line: *line });
                    }
                }
                last = Some((t, idx));
                match parsed {
                    Parsed::Raster(f) => rasters.push(f),
                    Parsed::Boxes(f) => box_frames.push(f),
                }
            }
            Err(e) => sink.push(e),
        }
    }
    if !rasters.is_empty() && !box_frames.is_empty() {
        sink.push(IngestError::Malformed {
            path: path.to_path_buf(),
            reason: "file mixes raster and box records".into(),
        });
    }
    if sink.len() > before {
        return None;
    }
    Some(if rasters.is_empty() {
        LabelSource::Boxes(BoxTrackLabelSource {
            frames: box_frames,
            priority: ctx.box_priority.clone(),
            width: ctx.meta.width,
            height: ctx.meta.height,
        })
    } else {
        LabelSource::Raster(LabelMapSequence {
            frames: rasters,
            n_objects: ctx.category_map.keys().next_back().copied().unwrap_or(0),
            provenance: path.display().to_string(),
        })
    })
}

pub fn load_label_source(path: &Path, ctx: &LabelContext<'_>) -> Result<LabelSource, IngestError> {
    let mut sink = Vec::new();
    parse_label_source(path, ctx, &mut sink).ok_or_else(|| sink.swap_remove(0))
}
