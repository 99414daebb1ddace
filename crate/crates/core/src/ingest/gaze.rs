//! Gaze streams: loading, clock shifting, range flagging.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::StreamMeta;
use super::{jsonl, IngestError};
use crate::{Nanos, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    /// Session-clock time.
    pub t_ns: Nanos,
    pub x: f64,
    pub y: f64,
    pub conf: Option<f64>,
    /// False when the point is non-finite or outside the frame.
    pub valid: bool,
}

impl GazeSample {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazeTrack {
    pub wearer_id: String,
    pub samples: Vec<GazeSample>,
    pub meta: StreamMeta,
}

/// One sample as it appears in a gaze file (device clock).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawGazeRecord {
    pub t_ns: Nanos,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conf: Option<f64>,
}

impl GazeTrack {
    /// Shift, sort, and flag raw records. `lines` carries the source line of each
    /// record for error reporting.
    pub fn from_records(
        wearer_id: &str,
        meta: StreamMeta,
        clock_offset_ns: Nanos,
        records: Vec<(usize, RawGazeRecord)>,
        origin: &Path,
    ) -> Result<Self, IngestError> {
        meta.validate(wearer_id)?;
        if records.is_empty() {
            return Err(IngestError::EmptyStream { path: origin.to_path_buf() });
        }
        let mut shifted = Vec::with_capacity(records.len());
        for (line, r) in records {
            if let Some(c) = r.conf {
                if !(0.0..=1.0).contains(&c) {
                    return Err(IngestError::BadRecord {
                        path: origin.to_path_buf(),
                        line,
                        reason: format!("confidence {c} outside [0, 1]"),
                    });
                }
            }
            let t_ns = r.t_ns.checked_add(clock_offset_ns).ok_or_else(|| IngestError::BadRecord {
                path: origin.to_path_buf(),
                line,
                reason: "timestamp overflows after clock offset".into(),
            })?;
            let valid = r.x.is_finite()
                && r.y.is_finite()
                && (0.0..=meta.width as f64).contains(&r.x)
                && (0.0..=meta.height as f64).contains(&r.y);
            shifted.push((line, GazeSample { t_ns, x: r.x, y: r.y, conf: r.conf, valid }));
        }
        shifted.sort_by_key(|(_, s)| s.t_ns);
        for pair in shifted.windows(2) {
            if pair[0].1.t_ns == pair[1].1.t_ns {
                return Err(IngestError::NonMonotonicTimestamps {
                    path: origin.to_path_buf(),
                    line: pair[0].0.max(pair[1].0),
                });
            }
        }
        Ok(Self {
            wearer_id: wearer_id.to_string(),
            samples: shifted.into_iter().map(|(_, s)| s).collect(),
            meta,
        })
    }

    /// Convenience for in-memory construction in session time (offset 0).
    pub fn from_raw(wearer_id: &str, meta: StreamMeta, records: Vec<RawGazeRecord>) -> Result<Self, IngestError> {
        let numbered = records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        Self::from_records(wearer_id, meta, 0, numbered, Path::new("<memory>"))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.samples.iter().filter(|s| s.valid).count()
    }

    /// Time from first to last sample.
    pub fn span_ns(&self) -> Nanos {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t_ns - a.t_ns,
            _ => 0,
        }
    }

    pub fn shifted(&self, delta_ns: Nanos) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.t_ns += delta_ns;
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    t_ns: Nanos,
    x: f64,
    y: f64,
    conf: Option<f64>,
}

fn read_csv(path: &Path) -> Result<Vec<(usize, RawGazeRecord)>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let row = row.map_err(|e| IngestError::BadRecord {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        // header is line 1
        out.push((out.len() + 2, RawGazeRecord { t_ns: row.t_ns, x: row.x, y: row.y, conf: row.conf }));
    }
    Ok(out)
}

pub fn read_gaze_records(path: &Path) -> Result<Vec<(usize, RawGazeRecord)>, IngestError> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        return read_csv(path);
    }
    jsonl::read_lines(path)?
        .into_iter()
        .map(|(line, text)| Ok((line, jsonl::parse_record(path, line, &text)?)))
        .collect()
}

/// Load a JSON Lines (or `.csv`) gaze stream and move it onto the session clock.
pub fn load_gaze_track(
    path: &Path,
    wearer_id: &str,
    meta: StreamMeta,
    clock_offset_ns: Nanos,
) -> Result<GazeTrack, IngestError> {
    let records = read_gaze_records(path)?;
    GazeTrack::from_records(wearer_id, meta, clock_offset_ns, records, path)
}
