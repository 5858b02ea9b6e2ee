use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use liftrack::embedding::checkpoint;
use liftrack::mot::{
    evaluate_clear_mot, format_mot, load_sequence, read_mot, save_sequence, synth_sequence, SequenceData, SynthSpec,
};
use liftrack::pipeline::{
    ablate, encode_detections, fit_affinities, format_ablation, pregroup, prepare, run_tracking, track_sequence,
    tracklet_labels, train_embedding, AffinityModels, PipelineConfig,
};
use liftrack::solver::{read_instance, solve, solve_bruteforce, BRUTE_FORCE_MAX_NODES};
use liftrack::Partition;

#[derive(Parser)]
#[command(name = "liftrack", version, about = "Self-supervised tracking with lifted multicuts")]
struct Cli {
    /// Pipeline settings, one `key = value` per line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic sequence into a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// JSON synthetic-sequence settings; defaults otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        identities: Option<usize>,
        #[arg(long)]
        frames: Option<u32>,
        /// Square patch side in pixels.
        #[arg(long)]
        patch: Option<usize>,
    },
    /// Group detections into tracklets; writes one label per detection line.
    Pregroup {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the autoencoder; writes both checkpoints and the loss trace.
    TrainEmbedding {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the edge regressors on latents from a checkpoint.
    FitAffinity {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track a sequence and write MOTChallenge results. Without `--model`
    /// the embedding is trained first.
    Track {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        affinity: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// CLEAR MOT and IDF1 of a result file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, default_value_t = liftrack::mot::MATCH_IOU)]
        iou: f64,
    },
    /// Solve a multicut instance file.
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Exact)]
        solver: SolverKind,
    },
    /// Run the feature ablation grid on a sequence with ground truth.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Exact,
    Heuristic,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Pregroup { .. } => "pregroup",
            Command::TrainEmbedding { .. } => "train-embedding",
            Command::FitAffinity { .. } => "fit-affinity",
            Command::Track { .. } => "track",
            Command::Eval { .. } => "eval",
            Command::Oracle { .. } => "oracle",
            Command::Ablate { .. } => "ablate",
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::read(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn load(dir: &Path) -> anyhow::Result<SequenceData> {
    load_sequence(dir).with_context(|| format!("loading sequence from {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_affinity(path: &Path) -> anyhow::Result<AffinityModels> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Blocks in order of their smallest node, nodes as letters when there are
/// at most 26 of them.
fn format_partition(p: &Partition) -> String {
    let name = |v: usize| {
        if p.len() <= 26 {
            char::from(b'a' + v as u8).to_string()
        } else {
            v.to_string()
        }
    };
    p.components()
        .iter()
        .map(|c| format!("{{{}}}", c.iter().map(|&v| name(v)).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join("|")
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Synth {
            out,
            spec,
            identities,
            frames,
            patch,
        } => {
            let mut s: SynthSpec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => SynthSpec::default(),
            };
            s.identities = identities.unwrap_or(s.identities);
            s.frames = frames.unwrap_or(s.frames);
            if let Some(side) = patch {
                s.patch = (3, *side, *side);
            }
            s.seed = cli.seed.unwrap_or(s.seed);
            let seq = synth_sequence(&s)?;
            save_sequence(
                out,
                &SequenceData {
                    detections: seq.detections,
                    matches: seq.matches,
                    gt: Some(seq.gt),
                },
            )?;
            write(&out.join("truth.txt"), seq.truth.iter().map(|t| format!("{}\n", t.map_or(-1, |i| i as i64))).collect::<String>())?;
            println!("wrote {}", out.display());
        }
        Command::Pregroup { data, out } => {
            let seq = load(data)?;
            let tracklets = pregroup(&seq.detections, &seq.matches, config.pregroup_threshold, config.pregroup_max_gap);
            let labels = tracklet_labels(&tracklets, seq.detections.len());
            let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
            match out {
                Some(path) => write(path, text)?,
                None => print!("{text}"),
            }
            eprintln!("{} detections, {} tracklets", seq.detections.len(), tracklets.len());
        }
        Command::TrainEmbedding { data, out } => {
            let seq = load(data)?;
            let tracklets = pregroup(&seq.detections, &seq.matches, config.pregroup_threshold, config.pregroup_max_gap);
            let emb = train_embedding(&seq.detections, &tracklets, &config)?;
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            checkpoint::save(&emb.clustered, &out.join("clustered.ltae"))?;
            checkpoint::save(&emb.reconstruction, &out.join("reconstruction.ltae"))?;
            let mut trace = String::from("epoch\tlambda\treconstruction\tclustering\n");
            for s in &emb.trace {
                let _ = writeln!(trace, "{}\t{}\t{}\t{}", s.epoch, s.lambda, s.reconstruction, s.clustering);
            }
            write(&out.join("trace.tsv"), trace)?;
            println!("wrote {}", out.display());
        }
        Command::FitAffinity { data, model, out } => {
            let seq = load(data)?;
            let model = checkpoint::load(model)?;
            let latents = encode_detections(&model, &seq.detections)?;
            let affinity = fit_affinities(&seq.detections, &seq.matches, &latents, &config)?;
            write(out, serde_json::to_string_pretty(&affinity)? + "\n")?;
            println!("nearby {:?}\nlifted {:?}", affinity.nearby.beta, affinity.lifted.beta);
        }
        Command::Track {
            data,
            model,
            affinity,
            out,
        } => {
            let seq = load(data)?;
            let run = match model {
                None => track_sequence(&seq.detections, &seq.matches, &config)?,
                Some(path) => {
                    let model = checkpoint::load(path)?;
                    let affinity = match affinity {
                        Some(p) => read_affinity(p)?,
                        None => {
                            let latents = encode_detections(&model, &seq.detections)?;
                            fit_affinities(&seq.detections, &seq.matches, &latents, &config)?
                        }
                    };
                    run_tracking(&seq.detections, &seq.matches, &model, &affinity, &config)?
                }
            };
            write(out, format_mot(&run.tracks.to_records()))?;
            println!("{} tracks, objective {}", run.tracks.len(), run.objective);
        }
        Command::Eval { gt, hyp, iou } => {
            let r = evaluate_clear_mot(&read_mot(gt)?, &read_mot(hyp)?, *iou)?;
            println!("MOTA {:.3}", r.mota);
            println!("MOTP {:.3}", r.motp);
            println!("IDF1 {:.3}", r.idf1);
            println!("IDs {}", r.ids);
            println!("MT {}", r.mt);
            println!("ML {}", r.ml);
            println!("FP {}", r.fp);
            println!("FN {}", r.fn_);
        }
        Command::Oracle { instance, solver } => {
            let inst = read_instance(instance)?;
            let solution = match solver {
                SolverKind::Exact => {
                    if inst.num_nodes() > BRUTE_FORCE_MAX_NODES {
                        bail!(
                            "{} nodes exceed the exact solver's limit of {BRUTE_FORCE_MAX_NODES}; use --solver heuristic",
                            inst.num_nodes()
                        );
                    }
                    solve_bruteforce(&inst)?
                }
                SolverKind::Heuristic => solve(&inst),
            };
            println!("partition {}", format_partition(&solution.partition));
            println!("objective {}", solution.objective);
        }
        Command::Ablate { data, out } => {
            let seq = load(data)?;
            let Some(gt) = &seq.gt else {
                bail!("{} has no ground truth", data.display());
            };
            let prepared = prepare(&seq.detections, &seq.matches, &config)?;
            let rows = ablate(&seq.detections, &seq.matches, gt, &prepared, &config)?;
            let table = format_ablation(&rows);
            match out {
                Some(path) => write(path, &table)?,
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("liftrack {}: {e:#}", cli.command.name());
            ExitCode::FAILURE
        }
    }
}
