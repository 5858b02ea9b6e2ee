//! Renders a synthetic sequence and writes it in the on-disk layout the
//! `liftrack` binary reads.
//!
//! ```text
//! cargo run --release --example synthesize_sequence -- /tmp/seq
//! ```

use std::path::PathBuf;

use liftrack::mot::{save_sequence, synth_sequence, OcclusionWindow, SequenceData, SynthSpec};

fn main() -> anyhow::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "synthetic-sequence".into()).into();
    let spec = SynthSpec {
        identities: 4,
        frames: 60,
        occlusions: vec![OcclusionWindow { identity: 1, start: 20, end: 26 }],
        seed: 11,
        ..SynthSpec::default()
    };
    let seq = synth_sequence(&spec)?;
    let clutter = seq.truth.iter().filter(|t| t.is_none()).count();
    println!(
        "{} detections ({clutter} clutter), {} ground-truth boxes, {} matched pairs",
        seq.detections.len(),
        seq.gt.len(),
        seq.matches.len()
    );
    save_sequence(
        &out,
        &SequenceData {
            detections: seq.detections,
            matches: seq.matches,
            gt: Some(seq.gt),
        },
    )?;
    println!("wrote {}", out.display());
    Ok(())
}
