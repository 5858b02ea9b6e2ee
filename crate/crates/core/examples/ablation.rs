//! Runs the feature ablation grid on a synthetic sequence and prints a
//! tab-separated table.
//!
//! ```text
//! cargo run --release --example ablation -- --seed 1 --epochs 30
//! ```

use std::time::Instant;

use clap::Parser;
use liftrack::mot::{synth_sequence, SynthSpec};
use liftrack::pipeline::{ablate, format_ablation, prepare, PipelineConfig};

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    identities: usize,
    #[arg(long, default_value_t = 100)]
    frames: u32,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    /// Square patch side in pixels.
    #[arg(long, default_value_t = 32)]
    patch: usize,
    #[arg(long, default_value_t = 3)]
    stages: usize,
    #[arg(long)]
    lr: Option<f64>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let spec = SynthSpec {
        identities: args.identities,
        frames: args.frames,
        patch: (3, args.patch, args.patch),
        seed: args.seed,
        ..Default::default()
    };
    let seq = synth_sequence(&spec)?;
    let mut config = PipelineConfig::default();
    config.set_seed(args.seed);
    config.training.epochs = args.epochs;
    config.training.lambda_schedule = vec![(0, 0.0), (args.epochs / 2, 0.95)];
    config.arch.stages = args.stages;
    if let Some(lr) = args.lr {
        config.training.learning_rate = lr;
    }

    let t = Instant::now();
    let prepared = prepare(&seq.detections, &seq.matches, &config)?;
    eprintln!(
        "{} detections, {} tracklets, trained in {:.1}s",
        seq.detections.len(),
        prepared.tracklets.len(),
        t.elapsed().as_secs_f64()
    );
    let t = Instant::now();
    let trace = &prepared.embeddings.trace;
    for s in trace.iter().step_by(5).chain(trace.last()) {
        eprintln!("epoch {:>3} lambda {:.2} rec {:.3} clu {:.4}", s.epoch, s.lambda, s.reconstruction, s.clustering);
    }
    let rows = ablate(&seq.detections, &seq.matches, &seq.gt, &prepared, &config)?;
    eprintln!("grid solved in {:.1}s", t.elapsed().as_secs_f64());
    print!("{}", format_ablation(&rows));
    Ok(())
}
