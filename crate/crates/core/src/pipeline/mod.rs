//! End-to-end tracking: pre-grouping into tracklets, embedding training with
//! tracklet labels, affinity fitting, the lifted multicut solve and track
//! post-processing.

mod config;
mod pregroup;
mod tracks;

pub use config::{ArchSettings, EmbeddingKind, PipelineConfig};
pub use pregroup::{pregroup, tracklet_labels, Tracklet};
pub use tracks::{clusters_to_tracks, Track, TrackSet};

use serde::{Deserialize, Serialize};

use crate::affinity::{
    assemble_costs, fit_affinity, generate_labels, AffinityModel, FeatureSet, MatchTable, PairSignal,
};
use crate::detection::{Detection, ImagePatch};
use crate::embedding::{train_with, AutoEncoderModel, LatentVector, LossTrace, TrainingSet};
use crate::error::{Error, Result, Stage, StageExt};
use crate::graph::{build_graph, Edge, MulticutInstance, Partition};
use crate::mot::{evaluate_clear_mot, MotRecord, MotReport, MATCH_IOU};
use crate::solver::solve;

/// Autoencoders from one training run.
#[derive(Debug, Clone)]
pub struct Embeddings {
    /// Final model, trained with the clustering term.
    pub clustered: AutoEncoderModel,
    /// Snapshot from just before the clustering term switched on.
    pub reconstruction: AutoEncoderModel,
    pub trace: LossTrace,
}

impl Embeddings {
    pub fn model(&self, kind: EmbeddingKind) -> &AutoEncoderModel {
        match kind {
            EmbeddingKind::Clustered => &self.clustered,
            EmbeddingKind::Reconstruction => &self.reconstruction,
        }
    }
}

/// Regressors for regular edges and for lifted edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityModels {
    pub nearby: AffinityModel,
    /// Sees the latent distance only.
    pub lifted: AffinityModel,
}

fn images(detections: &[Detection]) -> Result<Vec<&ImagePatch>> {
    detections
        .iter()
        .enumerate()
        .map(|(i, d)| d.image.as_ref().ok_or(Error::MissingImage(i)))
        .collect()
}

/// Trains an autoencoder with tracklet labels. The reconstruction-only
/// snapshot is taken before the first epoch with a non-zero clustering
/// weight, or equals the final model when that epoch is never reached.
pub fn train_embedding(detections: &[Detection], tracklets: &[Tracklet], config: &PipelineConfig) -> Result<Embeddings> {
    let imgs = images(detections)?;
    let first = imgs.first().ok_or(Error::EmptyLabels)?;
    let arch = config.arch.build(first.shape());
    let mut model = AutoEncoderModel::new(arch, config.seed)?;
    let data = TrainingSet::new(
        imgs.into_iter().cloned().collect(),
        detections.iter().map(|d| d.frame).collect(),
        tracklet_labels(tracklets, detections.len()),
    )?;
    let switch = config.training.clustering_start();
    let mut snapshot = None;
    let trace = train_with(&mut model, &data, &config.training, |epoch, m| {
        if Some(epoch) == switch {
            snapshot = Some(m.clone());
        }
    })?;
    Ok(Embeddings {
        reconstruction: snapshot.unwrap_or_else(|| model.clone()),
        clustered: model,
        trace,
    })
}

pub fn encode_detections(model: &AutoEncoderModel, detections: &[Detection]) -> Result<Vec<LatentVector>> {
    images(detections)?.into_iter().map(|im| model.encode(im)).collect()
}

/// Pairs `1..=max_gap` frames apart, `(a, b)` with `a < b`.
fn nearby_pairs(detections: &[Detection], max_gap: u32) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by_key(|&i| (detections[i].frame, i));
    let mut pairs = Vec::new();
    for (p, &i) in order.iter().enumerate() {
        for &j in &order[p + 1..] {
            let gap = detections[j].frame - detections[i].frame;
            if gap > max_gap {
                break;
            }
            if gap > 0 {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

fn signal<'a>(matches: &'a MatchTable, latents: &'a [LatentVector]) -> impl Fn(usize, usize) -> Option<PairSignal> + 'a {
    move |a, b| {
        Some(PairSignal {
            overlap: matches.get(a, b),
            distance: latents.get(a)?.distance(latents.get(b)?),
        })
    }
}

/// Fits both regressors on pairs within `max_frame_gap`, labeled by
/// match-overlap thresholds.
pub fn fit_affinities(
    detections: &[Detection],
    matches: &MatchTable,
    latents: &[LatentVector],
    config: &PipelineConfig,
) -> Result<AffinityModels> {
    let pairs = nearby_pairs(detections, config.max_frame_gap);
    let labels = generate_labels(matches, pairs, &config.affinity)?;
    let sig = signal(matches, latents);
    Ok(AffinityModels {
        nearby: fit_affinity(&labels, config.features, &sig)?,
        lifted: fit_affinity(&labels, FeatureSet::DISTANCE, &sig)?,
    })
}

/// Output of one solve.
#[derive(Debug, Clone)]
pub struct TrackingRun {
    pub tracks: TrackSet,
    pub partition: Partition,
    pub instance: MulticutInstance,
    pub objective: f64,
}

impl TrackingRun {
    fn empty() -> Self {
        TrackingRun {
            tracks: TrackSet::default(),
            partition: Partition::singletons(0),
            instance: MulticutInstance::empty(0),
            objective: 0.0,
        }
    }
}

/// Nearest-rank quantile of `values` (which must be non-empty).
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Builds the graph, keeps lifted edges whose latent distance is at most the
/// configured quantile, assigns costs, solves and converts clusters to tracks.
pub fn track_with_latents(
    detections: &[Detection],
    matches: &MatchTable,
    latents: &[LatentVector],
    affinity: &AffinityModels,
    config: &PipelineConfig,
) -> Result<TrackingRun> {
    config.validate()?;
    let graph = build_graph(detections, config.max_frame_gap, &config.lifted_gaps).stage(Stage::BuildGraph)?;
    let sig = signal(matches, latents);
    let graph = if graph.lifted_edges().is_empty() {
        graph
    } else {
        let dist = |e: &Edge| sig(e.u, e.v).map(|s| s.distance).ok_or(Error::MissingFeatures(e.u, e.v));
        let ds = graph
            .lifted_edges()
            .iter()
            .map(dist)
            .collect::<Result<Vec<_>>>()
            .stage(Stage::BuildGraph)?;
        let cutoff = quantile(&ds, config.lifted_percentile);
        let kept: Vec<Edge> = graph
            .lifted_edges()
            .iter()
            .zip(&ds)
            .filter(|(_, &d)| d <= cutoff)
            .map(|(e, _)| *e)
            .collect();
        MulticutInstance::new(graph.num_nodes(), graph.edges().to_vec(), kept).stage(Stage::BuildGraph)?
    };
    let frames: Vec<u32> = detections.iter().map(|d| d.frame).collect();
    let instance =
        assemble_costs(&graph, &frames, &affinity.nearby, &affinity.lifted, &sig).stage(Stage::AssembleCosts)?;
    let solution = solve(&instance);
    let tracks = clusters_to_tracks(detections, &solution.partition, config.min_cluster_size);
    Ok(TrackingRun {
        tracks,
        partition: solution.partition,
        instance,
        objective: solution.objective,
    })
}

/// Tracks `detections` with a trained encoder and fitted affinities.
pub fn run_tracking(
    detections: &[Detection],
    matches: &MatchTable,
    model: &AutoEncoderModel,
    affinity: &AffinityModels,
    config: &PipelineConfig,
) -> Result<TrackingRun> {
    if detections.is_empty() {
        return Ok(TrackingRun::empty());
    }
    let latents = encode_detections(model, detections).stage(Stage::AssembleCosts)?;
    track_with_latents(detections, matches, &latents, affinity, config)
}

/// Everything that does not depend on the feature set or graph range.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub tracklets: Vec<Tracklet>,
    pub embeddings: Embeddings,
    pub clustered_latents: Vec<LatentVector>,
    pub reconstruction_latents: Vec<LatentVector>,
}

impl Prepared {
    pub fn latents(&self, kind: EmbeddingKind) -> &[LatentVector] {
        match kind {
            EmbeddingKind::Clustered => &self.clustered_latents,
            EmbeddingKind::Reconstruction => &self.reconstruction_latents,
        }
    }
}

/// Pre-groups and trains the embedding once per sequence.
pub fn prepare(detections: &[Detection], matches: &MatchTable, config: &PipelineConfig) -> Result<Prepared> {
    config.validate()?;
    let tracklets = pregroup(detections, matches, config.pregroup_threshold, config.pregroup_max_gap);
    let embeddings = train_embedding(detections, &tracklets, config).stage(Stage::TrainEmbedding)?;
    let clustered_latents = encode_detections(&embeddings.clustered, detections).stage(Stage::TrainEmbedding)?;
    let reconstruction_latents =
        encode_detections(&embeddings.reconstruction, detections).stage(Stage::TrainEmbedding)?;
    Ok(Prepared {
        tracklets,
        embeddings,
        clustered_latents,
        reconstruction_latents,
    })
}

/// Fits affinities for `config` on prepared latents and tracks.
pub fn track_prepared(
    detections: &[Detection],
    matches: &MatchTable,
    prepared: &Prepared,
    config: &PipelineConfig,
) -> Result<TrackingRun> {
    let latents = prepared.latents(config.embedding);
    let affinity = fit_affinities(detections, matches, latents, config).stage(Stage::FitAffinity)?;
    track_with_latents(detections, matches, latents, &affinity, config)
}

/// Full pipeline on one sequence.
pub fn track_sequence(detections: &[Detection], matches: &MatchTable, config: &PipelineConfig) -> Result<TrackingRun> {
    if detections.is_empty() {
        return Ok(TrackingRun::empty());
    }
    let prepared = prepare(detections, matches, config)?;
    track_prepared(detections, matches, &prepared, config)
}

/// One row of the feature ablation.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub features: String,
    pub distance: String,
    pub report: MotReport,
}

/// The feature grid as `(features, embedding, max_frame_gap, lifted)`.
pub fn ablation_grid() -> Vec<(FeatureSet, EmbeddingKind, u32, bool)> {
    use EmbeddingKind::*;
    let mut grid = Vec::new();
    for gap in [3, 5] {
        grid.push((FeatureSet::OVERLAP, Clustered, gap, false));
        grid.push((FeatureSet::DISTANCE, Reconstruction, gap, false));
        grid.push((FeatureSet::DISTANCE, Clustered, gap, false));
        grid.push((FeatureSet::COMBINED, Reconstruction, gap, false));
        grid.push((FeatureSet::COMBINED, Clustered, gap, false));
    }
    grid.push((FeatureSet::COMBINED, Clustered, 5, true));
    grid
}

fn describe(features: FeatureSet, kind: EmbeddingKind, lifted: bool) -> String {
    let d = match kind {
        EmbeddingKind::Clustered => "d_AE+C",
        EmbeddingKind::Reconstruction => "d_AE",
    };
    let mut parts = Vec::new();
    if features.overlap {
        parts.push("IoU_DM".to_string());
    }
    if features.distance {
        parts.push(d.to_string());
    }
    if features.product {
        parts.push(format!("IoU_DM*{d}"));
    }
    let mut name = parts.join(" + ");
    if lifted {
        name.push_str(" Lift");
    }
    name
}

/// Runs the feature grid on one prepared sequence and scores it against `gt`.
/// Lifted rows use `base.lifted_gaps`; the others use none.
pub fn ablate(
    detections: &[Detection],
    matches: &MatchTable,
    gt: &[MotRecord],
    prepared: &Prepared,
    base: &PipelineConfig,
) -> Result<Vec<AblationRow>> {
    ablation_grid()
        .into_iter()
        .map(|(features, embedding, gap, lifted)| {
            let config = PipelineConfig {
                features,
                embedding,
                max_frame_gap: gap,
                lifted_gaps: if lifted { base.lifted_gaps.clone() } else { Vec::new() },
                ..base.clone()
            };
            let run = track_prepared(detections, matches, prepared, &config)?;
            let report = evaluate_clear_mot(gt, &run.tracks.to_records(), MATCH_IOU).stage(Stage::Evaluate)?;
            Ok(AblationRow {
                features: describe(features, embedding, lifted),
                distance: format!("1-{gap}"),
                report,
            })
        })
        .collect()
}

/// Tab-separated table with a header line.
pub fn format_ablation(rows: &[AblationRow]) -> String {
    let mut out = String::from("features\tdistance\tMOTA\tMOTP\tIDs\tMT\tML\tFP\tFN\n");
    for r in rows {
        let m = &r.report;
        out.push_str(&format!(
            "{}\t{}\t{:.1}\t{:.1}\t{}\t{}\t{}\t{}\t{}\n",
            r.features,
            r.distance,
            100.0 * m.mota,
            100.0 * m.motp,
            m.ids,
            m.mt,
            m.ml,
            m.fp,
            m.fn_
        ));
    }
    out
}
