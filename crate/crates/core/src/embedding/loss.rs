//! Reconstruction and clustering losses and their gradients.
//!
//! For a batch of `B` images the combined loss is
//! `(1 - λ) · (1/BD) Σ ‖g(f(x)) - x‖² + λ · (1/B) Σ ‖f(x) - c̃‖²`
//! with `D` values per image,
//! so `λ = 0` trains pure reconstruction and `λ → 1` pulls latent codes onto
//! their cluster centroids. Centroids are treated as constants.

use std::collections::BTreeMap;

use super::layers::Mode;
use super::model::{backprop, AutoEncoderModel, LatentVector};
use super::tensor::Tensor;
use crate::detection::ImagePatch;
use crate::error::{Error, Result};

/// Per-cluster mean latent code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CentroidTable {
    pub centroids: BTreeMap<usize, LatentVector>,
}

impl CentroidTable {
    pub fn get(&self, label: usize) -> Result<&LatentVector> {
        self.centroids.get(&label).ok_or(Error::MissingCentroid(label))
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Loss value split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub reconstruction: f64,
    pub clustering: f64,
    pub combined: f64,
}

/// Squared reconstruction error averaged over batch and pixels.
pub fn reconstruction_loss(model: &AutoEncoderModel, batch: &[&ImagePatch]) -> Result<f64> {
    Ok(evaluate(model, batch, None, 0.0, Mode::Infer)?.reconstruction)
}

/// `(1 - λ) · reconstruction + λ · clustering` in inference mode.
pub fn combined_loss(
    model: &AutoEncoderModel,
    batch: &[&ImagePatch],
    labels: &[usize],
    centroids: &CentroidTable,
    lambda: f64,
) -> Result<f64> {
    Ok(evaluate(model, batch, Some((labels, centroids)), lambda, Mode::Infer)?.combined)
}

/// Mean latent code per label over the whole dataset (one encoder pass).
pub fn compute_centroids(model: &AutoEncoderModel, images: &[ImagePatch], labels: &[usize]) -> Result<CentroidTable> {
    if images.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", images.len()),
            got: format!("{} labels", labels.len()),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let latents = model.encode_all(images)?;
    Ok(centroids_of(&latents, labels))
}

pub(crate) fn centroids_of(latents: &[LatentVector], labels: &[usize]) -> CentroidTable {
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for (z, &l) in latents.iter().zip(labels) {
        let slot = sums.entry(l).or_insert_with(|| (vec![0.0; z.dim()], 0));
        for (s, v) in slot.0.iter_mut().zip(&z.0) {
            *s += v;
        }
        slot.1 += 1;
    }
    CentroidTable {
        centroids: sums
            .into_iter()
            .map(|(l, (s, n))| (l, LatentVector(s.into_iter().map(|v| v / n as f64).collect())))
            .collect(),
    }
}

fn centroid_targets(labels: &[usize], centroids: &CentroidTable, batch: usize, dim: usize) -> Result<Vec<f64>> {
    if labels.len() != batch {
        return Err(Error::ShapeMismatch {
            expected: format!("{batch} labels"),
            got: format!("{} labels", labels.len()),
        });
    }
    let mut out = Vec::with_capacity(batch * dim);
    for &l in labels {
        out.extend_from_slice(&centroids.get(l)?.0);
    }
    Ok(out)
}

fn check_batch(model: &AutoEncoderModel, batch: &[&ImagePatch], lambda: f64) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: "non-empty batch".into(),
            got: "0 images".into(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidTrainingConfig(format!("lambda {lambda} outside [0, 1]")));
    }
    batch.iter().try_for_each(|im| model.check_image(im))
}

fn evaluate(
    model: &AutoEncoderModel,
    batch: &[&ImagePatch],
    clusters: Option<(&[usize], &CentroidTable)>,
    lambda: f64,
    mode: Mode,
) -> Result<LossParts> {
    check_batch(model, batch, lambda)?;
    let x = Tensor::from_patches(batch)?;
    let (z, _) = model.forward_encoder(x.clone(), mode);
    let (y, _) = model.forward_decoder(z.clone(), mode);
    let b = batch.len() as f64;
    let reconstruction = sq_diff(&y.data, &x.data) / x.data.len() as f64;
    let clustering = match clusters {
        Some((labels, table)) => {
            let targets = centroid_targets(labels, table, batch.len(), z.sample_len())?;
            sq_diff(&z.data, &targets) / b
        }
        None => 0.0,
    };
    Ok(LossParts {
        reconstruction,
        clustering,
        combined: (1.0 - lambda) * reconstruction + lambda * clustering,
    })
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Loss plus per-layer parameter gradients (encoder layers, then decoder
/// layers), computed in training mode.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: LossParts,
    pub encoder: Vec<Vec<f64>>,
    pub decoder: Vec<Vec<f64>>,
    pub(crate) encoder_caches: super::model::Caches,
    pub(crate) decoder_caches: super::model::Caches,
}

/// Forward and backward pass of the combined loss. With `clusters = None`
/// the clustering term is zero whatever `lambda` is.
pub fn loss_and_gradients(
    model: &AutoEncoderModel,
    batch: &[&ImagePatch],
    clusters: Option<(&[usize], &CentroidTable)>,
    lambda: f64,
) -> Result<Gradients> {
    check_batch(model, batch, lambda)?;
    let x = Tensor::from_patches(batch)?;
    let b = batch.len() as f64;
    let (z, encoder_caches) = model.forward_encoder(x.clone(), Mode::Train);
    let (y, decoder_caches) = model.forward_decoder(z.clone(), Mode::Train);

    let n = x.data.len() as f64;
    let reconstruction = sq_diff(&y.data, &x.data) / n;
    let mut dy = y.clone();
    for (d, xv) in dy.data.iter_mut().zip(&x.data) {
        *d = (1.0 - lambda) * 2.0 * (*d - xv) / n;
    }
    let (mut dz, decoder) = backprop(&model.decoder, &decoder_caches, dy);

    let clustering = match clusters {
        Some((labels, table)) => {
            let targets = centroid_targets(labels, table, batch.len(), z.sample_len())?;
            for ((d, zv), t) in dz.data.iter_mut().zip(&z.data).zip(&targets) {
                *d += lambda * 2.0 * (zv - t) / b;
            }
            sq_diff(&z.data, &targets) / b
        }
        None => 0.0,
    };
    let (_, encoder) = backprop(&model.encoder, &encoder_caches, dz);
    Ok(Gradients {
        loss: LossParts {
            reconstruction,
            clustering,
            combined: (1.0 - lambda) * reconstruction + lambda * clustering,
        },
        encoder,
        decoder,
        encoder_caches,
        decoder_caches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{ArchConfig, Layer, LayerSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn patches(seed: u64, count: usize, shape: (usize, usize, usize)) -> Vec<ImagePatch> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, h, w) = shape;
        (0..count)
            .map(|_| ImagePatch::new(c, h, w, (0..c * h * w).map(|_| rng.gen()).collect()).unwrap())
            .collect()
    }

    /// Dense-only autoencoder with `dim` inputs, used as an identity fixture.
    fn linear_model(dim: usize, identity: bool) -> AutoEncoderModel {
        let arch = ArchConfig {
            input: (dim, 1, 1),
            latent_dim: dim,
            encoder: vec![LayerSpec::Dense { out: dim }],
            decoder: vec![LayerSpec::Dense { out: dim }],
        };
        let mut m = AutoEncoderModel::new(arch, 0).unwrap();
        for layer in m.layers_mut() {
            let p = layer.params_mut();
            p.iter_mut().for_each(|v| *v = 0.0);
            if identity {
                for i in 0..dim {
                    p[i * dim + i] = 1.0;
                }
            }
        }
        m
    }

    #[test]
    fn identity_autoencoder_has_zero_reconstruction_loss() {
        let m = linear_model(5, true);
        let xs = patches(1, 4, (5, 1, 1));
        let refs: Vec<_> = xs.iter().collect();
        assert_eq!(reconstruction_loss(&m, &refs).unwrap(), 0.0);
    }

    #[test]
    fn zero_decoder_on_unit_inputs_costs_one_per_pixel() {
        let m = linear_model(4, false);
        let mut xs = patches(2, 3, (4, 1, 1));
        for x in &mut xs {
            let norm = x.data.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.data.iter_mut().for_each(|v| *v /= norm);
        }
        let refs: Vec<_> = xs.iter().collect();
        assert!((4.0 * reconstruction_loss(&m, &refs).unwrap() - 1.0).abs() < 1e-12);
    }

    /// Independent forward pass: explicit loops over the reduced pyramid,
    /// written against the layer definitions rather than the layer code.
    fn manual_reconstruction_loss(m: &AutoEncoderModel, xs: &[ImagePatch]) -> f64 {
        fn conv(x: &[Vec<Vec<f64>>], params: &[f64], out_c: usize, relu: bool) -> Vec<Vec<Vec<f64>>> {
            let in_c = x.len();
            let (h, w) = (x[0].len(), x[0][0].len());
            let nw = out_c * in_c * 9;
            let mut y = vec![vec![vec![0.0; w]; h]; out_c];
            for o in 0..out_c {
                for r in 0..h {
                    for c in 0..w {
                        let mut acc = params[nw + o];
                        for i in 0..in_c {
                            for ky in 0..3 {
                                for kx in 0..3 {
                                    let (ry, cx) = (r as isize + ky as isize - 1, c as isize + kx as isize - 1);
                                    if ry >= 0 && cx >= 0 && (ry as usize) < h && (cx as usize) < w {
                                        acc += params[((o * in_c + i) * 3 + ky) * 3 + kx] * x[i][ry as usize][cx as usize];
                                    }
                                }
                            }
                        }
                        y[o][r][c] = if relu { acc.max(0.0) } else { acc };
                    }
                }
            }
            y
        }
        fn pool(x: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
            x.iter()
                .map(|p| {
                    (0..p.len() / 2)
                        .map(|r| {
                            (0..p[0].len() / 2)
                                .map(|c| {
                                    p[2 * r][2 * c]
                                        .max(p[2 * r][2 * c + 1])
                                        .max(p[2 * r + 1][2 * c])
                                        .max(p[2 * r + 1][2 * c + 1])
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        }
        fn up(x: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
            x.iter()
                .map(|p| (0..2 * p.len()).map(|r| (0..2 * p[0].len()).map(|c| p[r / 2][c / 2]).collect()).collect())
                .collect()
        }
        fn dense(x: &[f64], params: &[f64], out: usize, relu: bool) -> Vec<f64> {
            let n = x.len();
            (0..out)
                .map(|o| {
                    let v = params[out * n + o] + (0..n).map(|j| params[o * n + j] * x[j]).sum::<f64>();
                    if relu { v.max(0.0) } else { v }
                })
                .collect()
        }
        let p = |layers: &[Layer], i: usize| layers[i].params().to_vec();
        let (e, d) = (&m.encoder, &m.decoder);
        let mut total = 0.0;
        for x in xs {
            let (c, h, w) = x.shape();
            let img: Vec<Vec<Vec<f64>>> =
                (0..c).map(|ch| (0..h).map(|r| (0..w).map(|cc| x.at(ch, r, cc)).collect()).collect()).collect();
            // encoder: conv relu pool, conv relu pool, dense
            let a = pool(&conv(&img, &p(e, 0), 4, true));
            let a = pool(&conv(&a, &p(e, 3), 8, true));
            let flat: Vec<f64> = a.iter().flatten().flatten().copied().collect();
            let z = dense(&flat, &p(e, 6), 6, false);
            // decoder: dense relu reshape, up conv relu, up conv
            let v = dense(&z, &p(d, 0), 8 * 2 * 2, true);
            let t: Vec<Vec<Vec<f64>>> = (0..8).map(|ch| (0..2).map(|r| (0..2).map(|cc| v[ch * 4 + r * 2 + cc]).collect()).collect()).collect();
            let t = conv(&up(&t), &p(d, 4), 4, true);
            let out = conv(&up(&t), &p(d, 7), c, false);
            for ch in 0..c {
                for r in 0..h {
                    for cc in 0..w {
                        total += (out[ch][r][cc] - x.at(ch, r, cc)).powi(2);
                    }
                }
            }
        }
        total / (xs.len() * xs[0].data.len()) as f64
    }

    #[test]
    fn matches_independent_forward_pass() {
        let arch = ArchConfig::pyramid((3, 8, 8), 2, 4, 6, false);
        for seed in 0..3 {
            let mut m = AutoEncoderModel::new(arch.clone(), seed).unwrap();
            // non-zero biases so they are exercised too
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            for layer in m.layers_mut() {
                let wc = layer.weight_count();
                for v in layer.params_mut()[wc..].iter_mut() {
                    *v = rng.gen_range(-0.1..0.1);
                }
            }
            let xs = patches(seed, 3, (3, 8, 8));
            let refs: Vec<_> = xs.iter().collect();
            let ours = reconstruction_loss(&m, &refs).unwrap();
            let theirs = manual_reconstruction_loss(&m, &xs);
            assert!((ours - theirs).abs() <= 1e-12 * theirs.max(1.0), "{ours} vs {theirs}");
        }
    }

    #[test]
    fn lambda_zero_is_reconstruction_and_half_is_mean() {
        let m = AutoEncoderModel::new(ArchConfig::pyramid((3, 8, 8), 1, 4, 6, false), 1).unwrap();
        let xs = patches(3, 4, (3, 8, 8));
        let refs: Vec<_> = xs.iter().collect();
        let labels = [0, 0, 1, 2];
        let table = compute_centroids(&m, &xs, &labels).unwrap();
        let rec = reconstruction_loss(&m, &refs).unwrap();
        assert_eq!(combined_loss(&m, &refs, &labels, &table, 0.0).unwrap(), rec);
        let clu = combined_loss(&m, &refs, &labels, &table, 1.0).unwrap();
        let half = combined_loss(&m, &refs, &labels, &table, 0.5).unwrap();
        assert!((half - 0.5 * (rec + clu)).abs() < 1e-12);
        assert!(rec >= 0.0 && clu >= 0.0);
    }

    #[test]
    fn singleton_clusters_have_zero_clustering_loss() {
        let m = AutoEncoderModel::new(ArchConfig::pyramid((3, 8, 8), 1, 4, 6, false), 1).unwrap();
        let xs = patches(4, 3, (3, 8, 8));
        let refs: Vec<_> = xs.iter().collect();
        let labels = [10, 20, 30];
        let table = compute_centroids(&m, &xs, &labels).unwrap();
        assert_eq!(combined_loss(&m, &refs, &labels, &table, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn missing_centroid_is_an_error() {
        let m = AutoEncoderModel::new(ArchConfig::pyramid((3, 8, 8), 1, 4, 6, false), 1).unwrap();
        let xs = patches(4, 2, (3, 8, 8));
        let refs: Vec<_> = xs.iter().collect();
        let table = compute_centroids(&m, &xs[..1], &[0]).unwrap();
        assert!(matches!(
            combined_loss(&m, &refs, &[0, 1], &table, 0.5),
            Err(Error::MissingCentroid(1))
        ));
    }

    #[test]
    fn centroid_cases() {
        let v = LatentVector(vec![1.0, -2.0, 3.0]);
        let neg = LatentVector(v.0.iter().map(|x| -x).collect());
        let t = centroids_of(&[v.clone()], &[4]);
        assert_eq!(t.get(4).unwrap(), &v);
        let t = centroids_of(&[v.clone(), neg], &[0, 0]);
        assert_eq!(t.get(0).unwrap().0, vec![0.0, 0.0, 0.0]);
        let three = [LatentVector(vec![1.0, 0.0]), LatentVector(vec![2.0, 3.0]), LatentVector(vec![6.0, -6.0])];
        let t = centroids_of(&three, &[7, 7, 7]);
        assert_eq!(t.get(7).unwrap().0, vec![3.0, -1.0]);
    }

    #[test]
    fn centroids_ignore_dataset_order() {
        let m = AutoEncoderModel::new(ArchConfig::pyramid((3, 8, 8), 1, 4, 6, false), 1).unwrap();
        let xs = patches(5, 6, (3, 8, 8));
        let labels = [0, 1, 0, 2, 1, 0];
        let a = compute_centroids(&m, &xs, &labels).unwrap();
        let order = [5, 3, 1, 0, 4, 2];
        let xs2: Vec<_> = order.iter().map(|&i| xs[i].clone()).collect();
        let l2: Vec<_> = order.iter().map(|&i| labels[i]).collect();
        let b = compute_centroids(&m, &xs2, &l2).unwrap();
        for (l, c) in &a.centroids {
            let d = c.distance(b.get(*l).unwrap());
            assert!(d < 1e-12);
        }
        assert!(matches!(compute_centroids(&m, &[], &[]), Err(Error::EmptyLabels)));
    }
}
