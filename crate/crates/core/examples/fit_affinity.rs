//! Fits the regular and lifted edge models on labels derived from match
//! overlap and prints the resulting join probabilities and edge costs.
//!
//! ```text
//! cargo run --release --example fit_affinity
//! ```

use liftrack::affinity::edge_cost;
use liftrack::mot::{synth_sequence, SynthSpec};
use liftrack::pipeline::{encode_detections, fit_affinities, pregroup, train_embedding, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let seq = synth_sequence(&SynthSpec { identities: 4, frames: 60, seed: 8, ..SynthSpec::default() })?;
    let mut config = PipelineConfig::default();
    config.set_seed(8);
    config.training.epochs = 16;
    config.training.lambda_schedule = vec![(0, 0.0), (8, 0.95)];

    let tracklets = pregroup(&seq.detections, &seq.matches, config.pregroup_threshold, config.pregroup_max_gap);
    let emb = train_embedding(&seq.detections, &tracklets, &config)?;
    let latents = encode_detections(&emb.clustered, &seq.detections)?;
    let models = fit_affinities(&seq.detections, &seq.matches, &latents, &config)?;
    println!("regular model ({}): {:?}", models.nearby.features.describe(), models.nearby.beta);
    println!("lifted model ({}): {:?}", models.lifted.features.describe(), models.lifted.beta);

    println!("overlap  distance  p_same  cost");
    for overlap in [0.0, 0.3, 0.8] {
        for distance in [0.05, 0.2, 0.5] {
            let p = models.nearby.p_same(overlap, distance);
            println!("{overlap:>7}  {distance:>8}  {p:.3}  {:+.2}", edge_cost(p));
        }
    }
    Ok(())
}
