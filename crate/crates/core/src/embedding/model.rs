use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Cache, Layer, LayerSpec, Mode};
use super::tensor::Tensor;
use crate::detection::ImagePatch;
use crate::error::{Error, Result};

/// Layer lists for the encoder and decoder plus the input shape.
///
/// The encoder must end in a `latent_dim`-sized vector and the decoder must
/// map that vector back to the input shape; [`AutoEncoderModel::new`] checks
/// both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub input: (usize, usize, usize),
    pub latent_dim: usize,
    pub encoder: Vec<LayerSpec>,
    pub decoder: Vec<LayerSpec>,
}

impl ArchConfig {
    /// Mirrored conv/pool pyramid: every stage halves the spatial size and
    /// doubles the filter count, a dense layer produces the latent code, and
    /// the decoder upsamples back with a conv after every upsample. Rectifiers
    /// follow every conv except the final reconstruction.
    pub fn pyramid(
        input: (usize, usize, usize),
        stages: usize,
        base_filters: usize,
        latent_dim: usize,
        batchnorm: bool,
    ) -> Self {
        let (c, h, w) = input;
        let filters: Vec<usize> = (0..stages).map(|s| base_filters << s).collect();
        let mut encoder = Vec::new();
        for &f in &filters {
            encoder.push(LayerSpec::Conv { out_channels: f, kernel: 3 });
            if batchnorm {
                encoder.push(LayerSpec::BatchNorm);
            }
            encoder.push(LayerSpec::Relu);
            encoder.push(LayerSpec::MaxPool);
        }
        encoder.push(LayerSpec::Dense { out: latent_dim });

        let last = *filters.last().unwrap_or(&c);
        let (bh, bw) = (h >> stages, w >> stages);
        let mut decoder = vec![
            LayerSpec::Dense { out: last * bh * bw },
            LayerSpec::Relu,
            LayerSpec::Reshape {
                channels: last,
                height: bh,
                width: bw,
            },
        ];
        for s in (0..stages).rev() {
            decoder.push(LayerSpec::Upsample);
            if s == 0 {
                decoder.push(LayerSpec::Conv { out_channels: c, kernel: 3 });
            } else {
                decoder.push(LayerSpec::Conv {
                    out_channels: filters[s - 1],
                    kernel: 3,
                });
                if batchnorm {
                    decoder.push(LayerSpec::BatchNorm);
                }
                decoder.push(LayerSpec::Relu);
            }
        }
        ArchConfig {
            input,
            latent_dim,
            encoder,
            decoder,
        }
    }

    /// Desk-scale default: three stages on 32×32 RGB, 8/16/32 filters, 32-d latent.
    pub fn reduced() -> Self {
        Self::pyramid((3, 32, 32), 3, 8, 32, false)
    }

    /// Five stages on 64×64 RGB with batch normalization, 32-d latent.
    pub fn full_scale() -> Self {
        Self::pyramid((3, 64, 64), 5, 16, 32, true)
    }

    pub fn with_batchnorm(&self) -> bool {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .any(|l| matches!(l, LayerSpec::BatchNorm))
    }
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self::reduced()
    }
}

/// Latent code of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector(pub Vec<f64>);

impl LatentVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &LatentVector) -> f64 {
        self.squared_distance(other).sqrt()
    }

    pub fn squared_distance(&self, other: &LatentVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoEncoderModel {
    pub arch: ArchConfig,
    pub seed: u64,
    /// Number of completed training epochs.
    pub epoch: usize,
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
}

/// Forward caches for one pass through a layer stack.
pub(crate) type Caches = Vec<Cache>;

impl AutoEncoderModel {
    /// Builds the model with Xavier-uniform weights, zero biases and unit
    /// batch-norm scales, drawn from `seed`.
    pub fn new(arch: ArchConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bad = |m: String| Error::InvalidArchitecture(m);
        let mut shape = arch.input;
        let mut encoder = Vec::with_capacity(arch.encoder.len());
        for &spec in &arch.encoder {
            let (layer, next) = Layer::build(spec, shape, &mut rng).map_err(bad)?;
            encoder.push(layer);
            shape = next;
        }
        if shape != (arch.latent_dim, 1, 1) {
            return Err(bad(format!(
                "encoder produces {shape:?}, expected latent ({}, 1, 1)",
                arch.latent_dim
            )));
        }
        let mut decoder = Vec::with_capacity(arch.decoder.len());
        for &spec in &arch.decoder {
            let (layer, next) = Layer::build(spec, shape, &mut rng).map_err(bad)?;
            decoder.push(layer);
            shape = next;
        }
        if shape != arch.input {
            return Err(bad(format!(
                "decoder produces {shape:?}, expected input shape {:?}",
                arch.input
            )));
        }
        Ok(AutoEncoderModel {
            arch,
            seed,
            epoch: 0,
            encoder,
            decoder,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers().map(|l| l.params().len()).sum()
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(&self.decoder)
    }

    pub(crate) fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn check_image(&self, image: &ImagePatch) -> Result<()> {
        if image.shape() != self.arch.input {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.arch.input),
                got: format!("{:?}", image.shape()),
            });
        }
        Ok(())
    }

    pub fn encode(&self, image: &ImagePatch) -> Result<LatentVector> {
        self.check_image(image)?;
        let x = Tensor::from_patches(&[image])?;
        let z = run(&self.encoder, x, Mode::Infer);
        Ok(LatentVector(z.data))
    }

    pub fn encode_all(&self, images: &[ImagePatch]) -> Result<Vec<LatentVector>> {
        images.iter().map(|im| self.encode(im)).collect()
    }

    pub fn decode(&self, z: &LatentVector) -> Result<ImagePatch> {
        if z.dim() != self.latent_dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("latent of length {}", self.latent_dim()),
                got: format!("length {}", z.dim()),
            });
        }
        let x = Tensor::from_data(1, z.dim(), 1, 1, z.0.clone());
        let y = run(&self.decoder, x, Mode::Infer);
        let (c, h, w) = self.arch.input;
        ImagePatch::new(c, h, w, y.data)
    }

    pub fn reconstruct(&self, image: &ImagePatch) -> Result<ImagePatch> {
        self.decode(&self.encode(image)?)
    }

    /// Euclidean distance between the latent codes of two images.
    pub fn latent_distance(&self, a: &ImagePatch, b: &ImagePatch) -> Result<f64> {
        Ok(self.encode(a)?.distance(&self.encode(b)?))
    }

    pub(crate) fn forward_encoder(&self, x: Tensor, mode: Mode) -> (Tensor, Caches) {
        run_cached(&self.encoder, x, mode)
    }

    pub(crate) fn forward_decoder(&self, z: Tensor, mode: Mode) -> (Tensor, Caches) {
        run_cached(&self.decoder, z, mode)
    }
}

fn run(layers: &[Layer], mut x: Tensor, mode: Mode) -> Tensor {
    for layer in layers {
        x = layer.forward(&x, mode).0;
    }
    x
}

fn run_cached(layers: &[Layer], mut x: Tensor, mode: Mode) -> (Tensor, Caches) {
    let mut caches = Vec::with_capacity(layers.len());
    for layer in layers {
        let (y, cache) = layer.forward(&x, mode);
        caches.push(cache);
        x = y;
    }
    (x, caches)
}

/// Backpropagates `dy` through `layers`, returning the input gradient and
/// one parameter-gradient vector per layer (empty for parameter-free layers).
pub(crate) fn backprop(layers: &[Layer], caches: &Caches, mut dy: Tensor) -> (Tensor, Vec<Vec<f64>>) {
    let mut grads = vec![Vec::new(); layers.len()];
    for (i, layer) in layers.iter().enumerate().rev() {
        let (dx, g) = layer.backward(&caches[i], &dy);
        grads[i] = g;
        dy = dx;
    }
    (dy, grads)
}
