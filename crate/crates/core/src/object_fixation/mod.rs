//! Fixation-object resolution: each fixation takes the most frequent object
//! label found under its frame-aligned gaze points.

mod source;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use source::{
    check_box_priority, default_box_priority, load_label_source, parse_label_source, BoxFrame,
    BoxTrackLabelSource, LabelContext, LabelFrame, LabelMapSequence, LabelSource, RunProblem,
};

use crate::category::{Category, CategoryPriority};
use crate::gaze_events::{fixations_of, EventTimeline, EyeMovementEvent};
use crate::ingest::FramedGaze;
use crate::{Nanos, Point};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("frame {frame_idx} is not in the label source")]
    FrameMissing { frame_idx: u64 },
    #[error("point ({x}, {y}) is outside the frame")]
    PointOutOfBounds { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationAssignment {
    pub fix_idx: usize,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub object_id: u32,
    pub category: Category,
    /// Winner's share of the votes, in (0, 1].
    pub support: f64,
    /// Number of frames that voted.
    #[serde(default)]
    pub votes: usize,
}

impl FixationAssignment {
    pub fn duration_ns(&self) -> Nanos {
        self.end_ns - self.start_ns
    }
}

/// Mode of a vote tally. Ties go to the better-ranked category, then to the
/// lower object id. Returns `(object_id, count)`.
pub fn mode_with_tiebreak(
    tally: &BTreeMap<u32, usize>,
    category_of: impl Fn(u32) -> Category,
    priority: &CategoryPriority,
) -> Option<(u32, usize)> {
    tally
        .iter()
        .map(|(&id, &n)| (id, n))
        .min_by_key(|&(id, n)| (std::cmp::Reverse(n), priority.rank(category_of(id)), id))
}

/// Inputs shared by every fixation of one wearer.
pub struct AssignContext<'a> {
    pub labels: &'a LabelSource,
    /// Gaze aligned to `labels`' frame clock.
    pub framed_gaze: &'a FramedGaze,
    pub category_map: &'a BTreeMap<u32, Category>,
    pub priority: &'a CategoryPriority,
}

impl AssignContext<'_> {
    fn category_of(&self, id: u32) -> Category {
        self.category_map.get(&id).copied().unwrap_or(Category::Unknown)
    }

    /// Tally of labels under the gaze of every aligned frame in the fixation.
    /// Lookups that fail (point outside the label grid) vote for background.
    pub fn votes(&self, fix: &EyeMovementEvent) -> BTreeMap<u32, usize> {
        let mut tally = BTreeMap::new();
        for pos in self.framed_gaze.range(fix.start_ns, fix.end_ns) {
            let Some(p) = self.framed_gaze.frames[pos].gaze else { continue };
            let (w, h) = self.labels.frame_size(pos);
            // gaze on the far frame edge is valid; fold it into the last cell
            let p = Point::new(p.x.min((w as f64).next_down()), p.y.min((h as f64).next_down()));
            let id = self.labels.label_at_position(pos, p).unwrap_or(0);
            *tally.entry(id).or_insert(0) += 1;
        }
        tally
    }
}

/// Resolve one fixation's object. No votes at all yields background with
/// support 1.
pub fn assign_fixation(fix: &EyeMovementEvent, fix_idx: usize, ctx: &AssignContext<'_>) -> FixationAssignment {
    let tally = ctx.votes(fix);
    let total: usize = tally.values().sum();
    let (object_id, support) = match mode_with_tiebreak(&tally, |id| ctx.category_of(id), ctx.priority) {
        Some((id, n)) => (id, n as f64 / total as f64),
        None => (0, 1.0),
    };
    FixationAssignment {
        fix_idx,
        start_ns: fix.start_ns,
        end_ns: fix.end_ns,
        object_id,
        category: ctx.category_of(object_id),
        support,
        votes: total,
    }
}

/// Assign every fixation of a timeline, in temporal order.
pub fn assign_all(timeline: &EventTimeline, ctx: &AssignContext<'_>) -> Vec<FixationAssignment> {
    fixations_of(timeline)
        .iter()
        .enumerate()
        .map(|(i, f)| assign_fixation(f, i, ctx))
        .collect()
}
