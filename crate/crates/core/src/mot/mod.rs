//! MOTChallenge files, CLEAR MOT evaluation and synthetic sequences.

mod clear;
mod patches;
mod records;
mod sequence;
mod synth;

pub use clear::{evaluate_clear_mot, MotReport, MATCH_IOU};
pub use patches::{patches_from_bytes, patches_to_bytes, read_patches, write_patches};
pub use records::{format_mot, parse_mot, read_mot, write_mot, MotRecord};
pub use sequence::{
    load_sequence, save_sequence, SequenceData, DETECTIONS_FILE, GROUND_TRUTH_FILE, MATCHES_FILE, PATCHES_FILE,
};
pub use synth::{synth_sequence, Motion, OcclusionWindow, SynthSequence, SynthSpec};
