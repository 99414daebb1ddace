//! Session inputs: manifest, gaze streams, and their placement on the shared
//! session clock.
//!
//! Every timestamp in an input file is device time. A wearer's constant
//! `clock_offset_ns` maps it onto the session clock:
//! `t_session = t_device + clock_offset_ns`.

mod align;
mod error;
mod gaze;
pub mod jsonl;
mod manifest;

pub use align::{align_to_frames, FramedGaze, FramedSample, DEFAULT_ALIGN_TOLERANCE_NS};
pub use error::IngestError;
pub use gaze::{load_gaze_track, read_gaze_records, GazeSample, GazeTrack, RawGazeRecord};
pub use manifest::{
    parse_manifest, parse_manifest_str, ManifestFile, Role, SessionManifest, StreamMeta, WearerEntry,
};
