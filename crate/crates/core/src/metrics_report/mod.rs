//! Leadership metrics over fixation assignments and their session report.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{
    assemble_report, ConversationSection, EyeContactSection, FixationSection, LeadershipReport, MetricsError,
    ReportInputs,
};

use crate::object_fixation::FixationAssignment;
use crate::{ns_to_s, Category};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationStats {
    pub mean_s: f64,
    pub count: usize,
    pub total_s: f64,
}

/// Mean, count and total fixation duration per category. Categories with no
/// fixations are absent.
pub fn avg_fixation_time(assignments: &[FixationAssignment]) -> BTreeMap<Category, FixationStats> {
    let mut acc: BTreeMap<Category, (i64, usize)> = BTreeMap::new();
    for a in assignments {
        let e = acc.entry(a.category).or_default();
        e.0 += a.duration_ns();
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(c, (ns, n))| {
            let total_s = ns_to_s(ns);
            (c, FixationStats { mean_s: total_s / n as f64, count: n, total_s })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitionOptions {
    pub include_self: bool,
    /// Drop the unknown state; pairs touching an unknown fixation are not counted.
    pub exclude_unknown: bool,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self { include_self: true, exclude_unknown: false }
    }
}

/// `counts[i][j]` is the number of times a fixation on `states[i]` was
/// immediately followed by one on `states[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub states: Vec<Category>,
    pub counts: Vec<Vec<u64>>,
    pub include_self: bool,
}

impl TransitionMatrix {
    pub fn zeros(states: Vec<Category>, include_self: bool) -> Self {
        let n = states.len();
        Self { states, counts: vec![vec![0; n]; n], include_self }
    }

    fn index(&self, c: Category) -> Option<usize> {
        self.states.iter().position(|&s| s == c)
    }

    pub fn get(&self, from: Category, to: Category) -> u64 {
        match (self.index(from), self.index(to)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn off_diagonal_total(&self) -> u64 {
        let mut s = 0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if i != j {
                    s += c;
                }
            }
        }
        s
    }

    pub fn transpose(&self) -> Self {
        let n = self.states.len();
        let counts = (0..n).map(|i| (0..n).map(|j| self.counts[j][i]).collect()).collect();
        Self { states: self.states.clone(), counts, include_self: self.include_self }
    }

    /// Same counts with the states reordered by `order` (indices into `states`).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let states = order.iter().map(|&i| self.states[i]).collect();
        let counts = order.iter().map(|&i| order.iter().map(|&j| self.counts[i][j]).collect()).collect();
        Self { states, counts, include_self: self.include_self }
    }

    /// Count consecutive pairs of a sequence of `(fixation index, category)`.
    /// Only entries whose indices differ by one form a pair, so removing
    /// fixations never invents a transition between their neighbours.
    pub fn from_sequence(seq: &[(usize, Category)], states: Vec<Category>, include_self: bool) -> Self {
        let mut m = Self::zeros(states, include_self);
        for w in seq.windows(2) {
            let ((ia, a), (ib, b)) = (w[0], w[1]);
            if ib != ia + 1 || (!include_self && a == b) {
                continue;
            }
            if let (Some(i), Some(j)) = (m.index(a), m.index(b)) {
                m.counts[i][j] += 1;
            }
        }
        m
    }
}

pub fn build_transition_matrix(assignments: &[FixationAssignment], opts: TransitionOptions) -> TransitionMatrix {
    let states: Vec<Category> =
        Category::ALL.into_iter().filter(|&c| !(opts.exclude_unknown && c == Category::Unknown)).collect();
    let seq: Vec<(usize, Category)> = assignments.iter().map(|a| (a.fix_idx, a.category)).collect();
    TransitionMatrix::from_sequence(&seq, states, opts.include_self)
}

/// One minus the share of off-diagonal transitions left unmatched by their
/// reverse: `1 - sum_{a<b} |c_ab - c_ba| / sum_{a!=b} c_ab`, and 1 for a
/// matrix with no off-diagonal transitions.
pub fn symmetry_index(m: &TransitionMatrix) -> f64 {
    let s = m.off_diagonal_total();
    if s == 0 {
        return 1.0;
    }
    let n = m.states.len();
    let mut diff = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            diff += m.counts[a][b].abs_diff(m.counts[b][a]);
        }
    }
    1.0 - diff as f64 / s as f64
}
