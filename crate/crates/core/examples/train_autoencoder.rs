//! Trains the autoencoder on tracklet labels and compares latent distances
//! of same-identity and different-identity pairs before and after the
//! clustering term switches on.
//!
//! ```text
//! cargo run --release --example train_autoencoder -- 20
//! ```

use liftrack::embedding::LatentVector;
use liftrack::mot::{synth_sequence, SynthSpec};
use liftrack::pipeline::{encode_detections, pregroup, train_embedding, PipelineConfig};

/// Mean latent distance of same-identity and different-identity pairs up
/// to five frames apart.
fn separation(latents: &[LatentVector], truth: &[Option<usize>], frames: &[u32]) -> (f64, f64) {
    let (mut same, mut diff) = ((0.0, 0), (0.0, 0));
    for i in 0..latents.len() {
        for j in i + 1..latents.len() {
            if frames[j] == frames[i] || frames[j] - frames[i] > 5 {
                continue;
            }
            let slot = if truth[i].is_some() && truth[i] == truth[j] { &mut same } else { &mut diff };
            slot.0 += latents[i].distance(&latents[j]);
            slot.1 += 1;
        }
    }
    (same.0 / same.1.max(1) as f64, diff.0 / diff.1.max(1) as f64)
}

fn main() -> anyhow::Result<()> {
    let epochs: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(20);
    let seq = synth_sequence(&SynthSpec { identities: 4, frames: 60, seed: 5, ..SynthSpec::default() })?;
    let mut config = PipelineConfig::default();
    config.set_seed(5);
    config.training.epochs = epochs;
    config.training.lambda_schedule = vec![(0, 0.0), (epochs / 2, 0.95)];

    let tracklets = pregroup(&seq.detections, &seq.matches, config.pregroup_threshold, config.pregroup_max_gap);
    let emb = train_embedding(&seq.detections, &tracklets, &config)?;
    for s in &emb.trace {
        println!(
            "epoch {:>3}  lambda {:.2}  lr {:.4}  reconstruction {:.4}  clustering {:.4}",
            s.epoch, s.lambda, s.learning_rate, s.reconstruction, s.clustering
        );
    }

    let frames: Vec<u32> = seq.detections.iter().map(|d| d.frame).collect();
    for (name, model) in [("reconstruction only", &emb.reconstruction), ("with clustering", &emb.clustered)] {
        let latents = encode_detections(model, &seq.detections)?;
        let (same, diff) = separation(&latents, &seq.truth, &frames);
        println!("{name}: same identity {same:.3}, different {diff:.3}, ratio {:.2}", diff / same);
    }
    Ok(())
}
