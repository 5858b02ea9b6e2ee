//! Groups detections into tracklets from confident matches and reports how
//! pure they are against the synthetic truth.
//!
//! ```text
//! cargo run --release --example pregroup_tracklets
//! ```

use std::collections::BTreeSet;

use liftrack::mot::{synth_sequence, SynthSpec};
use liftrack::pipeline::{pregroup, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let seq = synth_sequence(&SynthSpec { seed: 3, ..SynthSpec::default() })?;
    let config = PipelineConfig::default();
    let tracklets = pregroup(&seq.detections, &seq.matches, config.pregroup_threshold, config.pregroup_max_gap);

    let mut impure = 0;
    let mut sizes = Vec::new();
    for t in &tracklets {
        let owners: BTreeSet<_> = t.members.iter().map(|&i| seq.truth[i]).collect();
        impure += (owners.len() > 1) as usize;
        sizes.push(t.members.len());
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    println!("{} detections -> {} tracklets, {impure} mixing identities", seq.detections.len(), tracklets.len());
    println!("largest: {:?}", &sizes[..sizes.len().min(10)]);
    Ok(())
}
