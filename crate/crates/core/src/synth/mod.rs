//! Seeded synthetic sessions with planted ground truth, and scoring of an
//! analysis against that truth.
//!
//! Gaze follows a scripted timeline of fixations on box centres, straight
//! constant-velocity saccades between them, and tracking gaps written as
//! invalid samples. Time not covered by planted segments is filled with
//! random fixations drawn from a ChaCha8 stream seeded by `seed`.

mod generate;
mod score;
mod spec;

pub use generate::{generate_session, utterance_template, GroundTruth, SynthOutput, TruthEvent, TruthKind, TruthWindow};
pub use score::{score_against_truth, ScoreInputs, Scores};
pub use spec::{FillSpec, LabelFormat, MutualWindow, Planted, SynthObject, SynthSpec, SynthUtterance, SynthWearer, Target};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible script for `{wearer_id}`: {reason}")]
    InfeasibleScript { wearer_id: String, reason: String },
    #[error("bad synth spec: {0}")]
    BadSpec(String),
    #[error("session mismatch: truth is `{expected}`, analysis is `{found}`")]
    SessionMismatch { expected: String, found: String },
    #[error("{0}")]
    Io(String),
}

impl SynthError {
    pub fn name(&self) -> &'static str {
        match self {
            SynthError::InfeasibleScript { .. } => "InfeasibleScript",
            SynthError::BadSpec(_) => "BadSpec",
            SynthError::SessionMismatch { .. } => "SessionMismatch",
            SynthError::Io(_) => "Io",
        }
    }
}
