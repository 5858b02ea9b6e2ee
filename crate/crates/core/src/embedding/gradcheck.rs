use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Cache, Layer, Mode};
use super::loss::{loss_and_gradients, CentroidTable};
use super::model::AutoEncoderModel;
use super::tensor::Tensor;
use crate::detection::ImagePatch;
use crate::error::Result;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-3;

/// Gradients below this magnitude are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(layer name, max relative error)` per parametric layer, encoder first.
    pub per_layer: Vec<(String, f64)>,
    pub checked: usize,
    /// Probes whose `±step` moved a rectifier or max-pool across a kink.
    pub skipped: usize,
}

/// Compares backpropagated gradients of the combined loss (training mode)
/// with central finite differences on up to `samples_per_layer` parameters
/// per layer. Differences at `FD_STEP` and `FD_STEP / 2` are combined by
/// Richardson extrapolation, which cancels the second-order truncation term.
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
///
/// A probe is skipped when the perturbed forward passes switch a rectifier
/// sign or a pooling argmax, since the loss is not differentiable across
/// that interval.
pub fn gradient_check(
    model: &AutoEncoderModel,
    batch: &[&ImagePatch],
    labels: &[usize],
    centroids: &CentroidTable,
    lambda: f64,
    samples_per_layer: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let clusters = Some((labels, centroids));
    let analytic = loss_and_gradients(model, batch, clusters, lambda)?;
    let analytic: Vec<Vec<f64>> = analytic.encoder.into_iter().chain(analytic.decoder).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut per_layer = Vec::new();
    let (_, baseline) = train_mode_loss(model, batch, labels, centroids, lambda)?;
    let mut checked = 0;
    let mut skipped = 0;
    let mut max_rel: f64 = 0.0;
    let layer_count = model.layers().count();

    for li in 0..layer_count {
        let count = model.layers().nth(li).unwrap().params().len();
        if count == 0 {
            continue;
        }
        let picks: Vec<usize> = if count <= samples_per_layer {
            (0..count).collect()
        } else {
            (0..samples_per_layer).map(|_| rng.gen_range(0..count)).collect()
        };
        let mut layer_max: f64 = 0.0;
        for p in picks {
            let original = model.layers().nth(li).unwrap().params()[p];
            let mut eval_at = |v: f64| -> Result<(f64, Vec<usize>)> {
                probe.layers_mut().nth(li).unwrap().params_mut()[p] = v;
                train_mode_loss(&probe, batch, labels, centroids, lambda)
            };
            let mut kinked = false;
            let mut central = |h: f64| -> Result<f64> {
                let (plus, plus_pattern) = eval_at(original + h)?;
                let (minus, minus_pattern) = eval_at(original - h)?;
                kinked |= plus_pattern != baseline || minus_pattern != baseline;
                Ok((plus - minus) / (2.0 * h))
            };
            let full = central(FD_STEP)?;
            let half = central(FD_STEP / 2.0)?;
            probe.layers_mut().nth(li).unwrap().params_mut()[p] = original;
            if kinked {
                skipped += 1;
                continue;
            }
            let numeric = (4.0 * half - full) / 3.0;
            let a = analytic[li][p];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            layer_max = layer_max.max(rel);
            checked += 1;
        }
        max_rel = max_rel.max(layer_max);
        per_layer.push((model.layers().nth(li).unwrap().name().to_string(), layer_max));
    }
    Ok(GradCheckReport {
        max_relative_error: max_rel,
        per_layer,
        checked,
        skipped,
    })
}

/// Loss in training mode plus the piecewise-linear activation pattern:
/// positive rectifier inputs and pooling argmaxes.
fn train_mode_loss(
    model: &AutoEncoderModel,
    batch: &[&ImagePatch],
    labels: &[usize],
    centroids: &CentroidTable,
    lambda: f64,
) -> Result<(f64, Vec<usize>)> {
    let x = Tensor::from_patches(batch)?;
    let (z, enc) = model.forward_encoder(x.clone(), Mode::Train);
    let (y, dec) = model.forward_decoder(z.clone(), Mode::Train);
    let mut pattern = Vec::new();
    for (layer, cache) in model.layers().zip(enc.iter().chain(&dec)) {
        match (layer, cache) {
            (Layer::Relu, Cache::Input(t)) => pattern.extend(t.data.iter().map(|&v| usize::from(v > 0.0))),
            (Layer::MaxPool, Cache::Pool { argmax, .. }) => pattern.extend_from_slice(argmax),
            _ => {}
        }
    }
    let b = batch.len() as f64;
    let rec: f64 = y.data.iter().zip(&x.data).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() / x.data.len() as f64;
    let mut clu = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let c = centroids.get(l)?;
        clu += z.sample(i).iter().zip(&c.0).map(|(a, t)| (a - t) * (a - t)).sum::<f64>();
    }
    Ok(((1.0 - lambda) * rec + lambda * clu / b, pattern))
}
