//! Leader utterance intent classes and their ratios.

mod adapter;
mod rules;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adapter::{
    classify_external, AdapterConfig, AdapterRequest, AdapterResponse, ClassifierAdapter, HttpAdapter,
    SubprocessAdapter, INSTRUCTION,
};
pub use rules::{classify_rule, Pattern, PatternKind, RuleSet};

use crate::ingest::{jsonl, IngestError};
use crate::Nanos;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConversationError {
    #[error("no utterances by leader `{leader_id}`")]
    NoLeaderUtterances { leader_id: String },
    #[error("classifier adapter unreachable: {reason}")]
    AdapterUnreachable { reason: String },
    #[error("malformed adapter response: {reason}")]
    MalformedResponse { reason: String },
    #[error("invalid rule set: {reason}")]
    BadRuleSet { reason: String },
    #[error("cannot read `{path}`: {reason}")]
    RuleSetIo { path: PathBuf, reason: String },
}

impl ConversationError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NoLeaderUtterances { .. } => "NoLeaderUtterances",
            Self::AdapterUnreachable { .. } => "AdapterUnreachable",
            Self::MalformedResponse { .. } => "MalformedResponse",
            Self::BadRuleSet { .. } => "BadRuleSet",
            Self::RuleSetIo { .. } => "RuleSetIo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Direct order, addressed to a named person.
    DO,
    /// Undirected order.
    UO,
    /// Planning.
    PL,
    /// Task assignment.
    TA,
    NONE,
}

impl Label {
    pub const ALL: [Label; 5] = [Label::DO, Label::UO, Label::PL, Label::TA, Label::NONE];
    /// The four intent classes, in tie-break order.
    pub const CLASSES: [Label; 4] = [Label::DO, Label::UO, Label::PL, Label::TA];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::DO => "DO",
            Label::UO => "UO",
            Label::PL => "PL",
            Label::TA => "TA",
            Label::NONE => "NONE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| format!("unknown label `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Annotation,
    Rule,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub speaker: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_source: Option<LabelSource>,
}

impl Utterance {
    pub fn new(start_ns: Nanos, end_ns: Nanos, speaker: &str, text: &str) -> Self {
        Self { start_ns, end_ns, speaker: speaker.into(), text: text.into(), label: None, label_source: None }
    }

    pub fn labeled(mut self, label: Label, source: LabelSource) -> Self {
        self.label = Some(label);
        self.label_source = Some(source);
        self
    }
}

/// Read a transcript, shifting timestamps by `clock_offset_ns`. Every bad
/// record is pushed into `sink`.
pub fn parse_transcript(path: &Path, clock_offset_ns: Nanos, sink: &mut Vec<IngestError>) -> Option<Vec<Utterance>> {
    let before = sink.len();
    let lines = match jsonl::read_lines(path) {
        Ok(l) => l,
        Err(e) => {
            sink.push(e);
            return None;
        }
    };
    let mut out = Vec::with_capacity(lines.len());
    for (line, text) in lines {
        let mut u: Utterance = match jsonl::parse_record(path, line, &text) {
            Ok(u) => u,
            Err(e) => {
                sink.push(e);
                continue;
            }
        };
        let bad = |reason: &str| IngestError::BadRecord { path: path.to_path_buf(), line, reason: reason.into() };
        if u.start_ns > u.end_ns {
            sink.push(bad("start_ns after end_ns"));
            continue;
        }
        match (u.start_ns.checked_add(clock_offset_ns), u.end_ns.checked_add(clock_offset_ns)) {
            (Some(s), Some(e)) => (u.start_ns, u.end_ns) = (s, e),
            _ => {
                sink.push(bad("timestamp overflows after clock offset"));
                continue;
            }
        }
        u.label_source = u.label.map(|_| LabelSource::Annotation);
        out.push(u);
    }
    out.sort_by_key(|u| (u.start_ns, u.end_ns));
    (sink.len() == before).then_some(out)
}

pub fn load_transcript(path: &Path, clock_offset_ns: Nanos) -> Result<Vec<Utterance>, IngestError> {
    let mut sink = Vec::new();
    parse_transcript(path, clock_offset_ns, &mut sink).ok_or_else(|| sink.swap_remove(0))
}

/// Transcript records with timestamps moved back to device time.
pub fn transcript_to_jsonl(utts: &[Utterance], clock_offset_ns: Nanos) -> String {
    let shifted: Vec<Utterance> = utts
        .iter()
        .map(|u| Utterance {
            start_ns: u.start_ns - clock_offset_ns,
            end_ns: u.end_ns - clock_offset_ns,
            label_source: None,
            ..u.clone()
        })
        .collect();
    jsonl::to_string(&shifted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRatios {
    /// Percent of all leader utterances, per intent class.
    pub percent: BTreeMap<Label, f64>,
    pub counts: BTreeMap<Label, usize>,
    pub leader_utterances: usize,
}

/// Per-class share of the leader's utterances, in percent. Unlabeled and NONE
/// utterances stay in the denominator.
pub fn category_ratios(utts: &[Utterance], leader_id: &str) -> Result<CategoryRatios, ConversationError> {
    let leader: Vec<&Utterance> = utts.iter().filter(|u| u.speaker == leader_id).collect();
    if leader.is_empty() {
        return Err(ConversationError::NoLeaderUtterances { leader_id: leader_id.to_string() });
    }
    let mut counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    for u in &leader {
        *counts.get_mut(&u.label.unwrap_or(Label::NONE)).unwrap() += 1;
    }
    let n = leader.len() as f64;
    let percent = Label::CLASSES.iter().map(|&l| (l, counts[&l] as f64 * 100.0 / n)).collect();
    Ok(CategoryRatios { percent, counts, leader_utterances: leader.len() })
}
