use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{compute_centroids, loss_and_gradients, CentroidTable};
use super::model::AutoEncoderModel;
use crate::detection::ImagePatch;
use crate::error::{Error, Result};

/// Clustering weight `λ` and learning-rate schedule for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// Initial learning rate `α₀`; epoch `t` uses `α₀ · 10^(-t / epochs)`.
    pub learning_rate: f64,
    /// `(first epoch, λ)` pairs; the last entry at or before an epoch applies.
    pub lambda_schedule: Vec<(usize, f64)>,
    pub seed: u64,
    /// Stop once the epoch loss has not improved by 0.1% for this many epochs.
    pub plateau_patience: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 40,
            learning_rate: 0.05,
            lambda_schedule: vec![(0, 0.0), (20, 0.95)],
            seed: 0,
            plateau_patience: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTrainingConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if let Some((_, l)) = self.lambda_schedule.iter().find(|(_, l)| !(0.0..=1.0).contains(l)) {
            return bad(format!("lambda {l} outside [0, 1]"));
        }
        if self.lambda_schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("lambda schedule epochs must be strictly increasing".into());
        }
        Ok(())
    }

    pub fn lambda_at(&self, epoch: usize) -> f64 {
        self.lambda_schedule
            .iter()
            .take_while(|(e, _)| *e <= epoch)
            .last()
            .map_or(0.0, |(_, l)| *l)
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * 10f64.powf(-(epoch as f64) / self.epochs.max(1) as f64)
    }

    /// First epoch with a non-zero clustering weight.
    pub fn clustering_start(&self) -> Option<usize> {
        self.lambda_schedule.iter().find(|(_, l)| *l > 0.0).map(|(e, _)| *e)
    }
}

/// Images with their frame numbers (batching) and tracklet labels (centroids).
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub images: Vec<ImagePatch>,
    pub frames: Vec<u32>,
    pub labels: Vec<usize>,
}

impl TrainingSet {
    pub fn new(images: Vec<ImagePatch>, frames: Vec<u32>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != frames.len() || images.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} frames and labels", images.len()),
                got: format!("{} frames, {} labels", frames.len(), labels.len()),
            });
        }
        if images.is_empty() {
            return Err(Error::EmptyLabels);
        }
        Ok(TrainingSet { images, frames, labels })
    }

    /// Indices grouped by frame, frames ascending.
    pub fn frame_batches(&self) -> Vec<Vec<usize>> {
        let mut by_frame: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &f) in self.frames.iter().enumerate() {
            by_frame.entry(f).or_default().push(i);
        }
        by_frame.into_values().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub reconstruction: f64,
    pub clustering: f64,
    pub combined: f64,
}

pub type LossTrace = Vec<EpochStats>;

/// Trains with plain SGD on per-frame batches in seeded random order.
pub fn train(model: &mut AutoEncoderModel, data: &TrainingSet, config: &TrainingConfig) -> Result<LossTrace> {
    train_with(model, data, config, |_, _| {})
}

/// [`train`] with a hook invoked before every epoch with the epoch index and
/// the model as it stands (used to snapshot the reconstruction-only model).
pub fn train_with(
    model: &mut AutoEncoderModel,
    data: &TrainingSet,
    config: &TrainingConfig,
    mut before_epoch: impl FnMut(usize, &AutoEncoderModel),
) -> Result<LossTrace> {
    config.validate()?;
    data.images.iter().try_for_each(|im| model.check_image(im))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut batches = data.frame_batches();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..config.epochs {
        before_epoch(epoch, model);
        let lambda = config.lambda_at(epoch);
        let lr = config.learning_rate_at(epoch);
        let centroids: Option<CentroidTable> = if lambda > 0.0 {
            Some(compute_centroids(model, &data.images, &data.labels)?)
        } else {
            None
        };
        batches.shuffle(&mut rng);

        let mut sums = (0.0, 0.0, 0.0);
        for batch in &batches {
            let images: Vec<&ImagePatch> = batch.iter().map(|&i| &data.images[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let clusters = centroids.as_ref().map(|t| (labels.as_slice(), t));
            let grads = loss_and_gradients(model, &images, clusters, lambda)?;
            if !grads.loss.combined.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: grads.loss.combined,
                });
            }
            let b = batch.len() as f64;
            sums.0 += grads.loss.reconstruction * b;
            sums.1 += grads.loss.clustering * b;
            sums.2 += grads.loss.combined * b;
            apply_sgd(model, &grads, lr);
        }
        if model.layers().any(|l| l.params().iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }
        model.epoch += 1;
        let n = data.images.len() as f64;
        let stats = EpochStats {
            epoch,
            lambda,
            learning_rate: lr,
            reconstruction: sums.0 / n,
            clustering: sums.1 / n,
            combined: sums.2 / n,
        };
        trace.push(stats);

        if let Some(patience) = config.plateau_patience {
            if stats.combined < best * (1.0 - 1e-3) {
                best = stats.combined;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(trace)
}

fn apply_sgd(model: &mut AutoEncoderModel, grads: &super::loss::Gradients, lr: f64) {
    let caches = grads.encoder_caches.iter().chain(&grads.decoder_caches);
    let layer_grads = grads.encoder.iter().chain(&grads.decoder);
    for ((layer, g), cache) in model.layers_mut().zip(layer_grads).zip(caches) {
        for (p, d) in layer.params_mut().iter_mut().zip(g) {
            *p -= lr * d;
        }
        layer.update_running_stats(cache);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lookup() {
        let c = TrainingConfig {
            epochs: 10,
            learning_rate: 0.001,
            lambda_schedule: vec![(0, 0.0), (4, 0.95)],
            ..Default::default()
        };
        assert_eq!(c.lambda_at(0), 0.0);
        assert_eq!(c.lambda_at(3), 0.0);
        assert_eq!(c.lambda_at(4), 0.95);
        assert_eq!(c.lambda_at(9), 0.95);
        assert_eq!(c.clustering_start(), Some(4));
        assert_eq!(c.learning_rate_at(0), 0.001);
        assert!((c.learning_rate_at(10) - 0.0001).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = TrainingConfig::default();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainingConfig::default();
        c.lambda_schedule = vec![(0, 1.5)];
        assert!(c.validate().is_err());
        let mut c = TrainingConfig::default();
        c.lambda_schedule = vec![(3, 0.0), (3, 0.5)];
        assert!(c.validate().is_err());
    }
}
