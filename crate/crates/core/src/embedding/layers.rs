//! Layers with hand-written forward and backward passes.
//!
//! Parametric layers keep weights and biases in one flat vector so that the
//! optimizer, gradient checker and checkpoint code can treat every layer the
//! same way. Convolutions are stride 1 with zero "same" padding; pooling and
//! upsampling use a fixed factor of 2.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

/// Declarative layer description used by [`super::ArchConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { out_channels: usize, kernel: usize },
    MaxPool,
    Upsample,
    Dense { out: usize },
    Relu,
    BatchNorm,
    Reshape { channels: usize, height: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv {
        in_c: usize,
        out_c: usize,
        k: usize,
        /// `out_c * in_c * k * k` weights followed by `out_c` biases.
        params: Vec<f64>,
    },
    MaxPool,
    Upsample,
    Dense {
        input: usize,
        out: usize,
        /// `out * input` weights followed by `out` biases.
        params: Vec<f64>,
    },
    Relu,
    BatchNorm {
        channels: usize,
        /// `channels` scales followed by `channels` shifts.
        params: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
    },
    Reshape {
        c: usize,
        h: usize,
        w: usize,
    },
}

/// What the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Input(Tensor),
    Pool { argmax: Vec<usize>, in_shape: (usize, usize, usize, usize) },
    Norm { xhat: Tensor, inv_std: Vec<f64>, mean: Vec<f64>, var: Vec<f64> },
    Shape((usize, usize, usize, usize)),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch normalization.
    Train,
    /// Running statistics in batch normalization.
    Infer,
}

impl Layer {
    /// Instantiates a layer for input shape `(c, h, w)`, returning the output
    /// shape, or an error message when the spec does not fit the shape.
    pub fn build(
        spec: LayerSpec,
        shape: (usize, usize, usize),
        rng: &mut impl Rng,
    ) -> Result<(Layer, (usize, usize, usize)), String> {
        let (c, h, w) = shape;
        Ok(match spec {
            LayerSpec::Conv { out_channels, kernel } => {
                if kernel % 2 == 0 {
                    return Err(format!("conv kernel must be odd, got {kernel}"));
                }
                let fan_in = c * kernel * kernel;
                let fan_out = out_channels * kernel * kernel;
                let mut params = xavier(rng, out_channels * c * kernel * kernel, fan_in, fan_out);
                params.extend(std::iter::repeat(0.0).take(out_channels));
                (
                    Layer::Conv {
                        in_c: c,
                        out_c: out_channels,
                        k: kernel,
                        params,
                    },
                    (out_channels, h, w),
                )
            }
            LayerSpec::MaxPool => {
                if h % 2 != 0 || w % 2 != 0 {
                    return Err(format!("max-pool needs even spatial size, got {h}x{w}"));
                }
                (Layer::MaxPool, (c, h / 2, w / 2))
            }
            LayerSpec::Upsample => (Layer::Upsample, (c, h * 2, w * 2)),
            LayerSpec::Dense { out } => {
                let input = c * h * w;
                let mut params = xavier(rng, out * input, input, out);
                params.extend(std::iter::repeat(0.0).take(out));
                (Layer::Dense { input, out, params }, (out, 1, 1))
            }
            LayerSpec::Relu => (Layer::Relu, shape),
            LayerSpec::BatchNorm => {
                let mut params = vec![1.0; c];
                params.extend(std::iter::repeat(0.0).take(c));
                (
                    Layer::BatchNorm {
                        channels: c,
                        params,
                        running_mean: vec![0.0; c],
                        running_var: vec![1.0; c],
                    },
                    shape,
                )
            }
            LayerSpec::Reshape {
                channels,
                height,
                width,
            } => {
                if channels * height * width != c * h * w {
                    return Err(format!(
                        "cannot reshape {c}x{h}x{w} into {channels}x{height}x{width}"
                    ));
                }
                (
                    Layer::Reshape {
                        c: channels,
                        h: height,
                        w: width,
                    },
                    (channels, height, width),
                )
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv { .. } => "conv",
            Layer::MaxPool => "maxpool",
            Layer::Upsample => "upsample",
            Layer::Dense { .. } => "dense",
            Layer::Relu => "relu",
            Layer::BatchNorm { .. } => "batchnorm",
            Layer::Reshape { .. } => "reshape",
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Layer::Conv { params, .. } | Layer::Dense { params, .. } | Layer::BatchNorm { params, .. } => params,
            _ => &[],
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Layer::Conv { params, .. } | Layer::Dense { params, .. } | Layer::BatchNorm { params, .. } => params,
            _ => &mut [],
        }
    }

    /// Number of weights (as opposed to biases or shifts) at the front of `params`.
    pub fn weight_count(&self) -> usize {
        match self {
            Layer::Conv { in_c, out_c, k, .. } => out_c * in_c * k * k,
            Layer::Dense { input, out, .. } => out * input,
            Layer::BatchNorm { channels, .. } => *channels,
            _ => 0,
        }
    }

    /// Xavier fan sizes for weight-bearing layers.
    pub fn fans(&self) -> Option<(usize, usize)> {
        match self {
            Layer::Conv { in_c, out_c, k, .. } => Some((in_c * k * k, out_c * k * k)),
            Layer::Dense { input, out, .. } => Some((*input, *out)),
            _ => None,
        }
    }

    pub fn forward(&self, x: &Tensor, mode: Mode) -> (Tensor, Cache) {
        match self {
            Layer::Conv { in_c, out_c, k, params } => {
                debug_assert_eq!(x.c, *in_c);
                (conv_forward(x, *in_c, *out_c, *k, params), Cache::Input(x.clone()))
            }
            Layer::MaxPool => {
                let (y, argmax) = pool_forward(x);
                (y, Cache::Pool { argmax, in_shape: x.shape() })
            }
            Layer::Upsample => (upsample_forward(x), Cache::Shape(x.shape())),
            Layer::Dense { input, out, params } => {
                debug_assert_eq!(x.sample_len(), *input);
                let mut y = Tensor::zeros(x.n, *out, 1, 1);
                let (wts, bias) = params.split_at(out * input);
                for i in 0..x.n {
                    let xs = x.sample(i);
                    let ys = y.sample_mut(i);
                    for (o, yo) in ys.iter_mut().enumerate() {
                        let row = &wts[o * input..(o + 1) * input];
                        *yo = bias[o] + dot(row, xs);
                    }
                }
                (y, Cache::Input(x.clone()))
            }
            Layer::Relu => {
                let mut y = x.clone();
                y.data.iter_mut().for_each(|v| *v = v.max(0.0));
                (y, Cache::Input(x.clone()))
            }
            Layer::BatchNorm {
                channels,
                params,
                running_mean,
                running_var,
            } => batchnorm_forward(x, *channels, params, running_mean, running_var, mode),
            Layer::Reshape { c, h, w } => {
                let y = Tensor::from_data(x.n, *c, *h, *w, x.data.clone());
                (y, Cache::Shape(x.shape()))
            }
        }
    }

    /// Returns the gradient with respect to the layer input and, for
    /// parametric layers, the gradient with respect to `params`.
    pub fn backward(&self, cache: &Cache, dy: &Tensor) -> (Tensor, Vec<f64>) {
        match (self, cache) {
            (Layer::Conv { in_c, out_c, k, params }, Cache::Input(x)) => conv_backward(x, dy, *in_c, *out_c, *k, params),
            (Layer::MaxPool, Cache::Pool { argmax, in_shape }) => {
                let (n, c, h, w) = *in_shape;
                let mut dx = Tensor::zeros(n, c, h, w);
                for (g, &idx) in dy.data.iter().zip(argmax) {
                    dx.data[idx] += g;
                }
                (dx, Vec::new())
            }
            (Layer::Upsample, Cache::Shape((n, c, h, w))) => {
                let mut dx = Tensor::zeros(*n, *c, *h, *w);
                for s in 0..*n {
                    for ch in 0..*c {
                        let src = dy.plane(s, ch);
                        let dst = dx.plane_mut(s, ch);
                        for y in 0..2 * h {
                            for x in 0..2 * w {
                                dst[(y / 2) * w + x / 2] += src[y * 2 * w + x];
                            }
                        }
                    }
                }
                (dx, Vec::new())
            }
            (Layer::Dense { input, out, params }, Cache::Input(x)) => {
                let (wts, _) = params.split_at(out * input);
                let mut grad = vec![0.0; params.len()];
                let mut dx = Tensor::zeros(x.n, x.c, x.h, x.w);
                for i in 0..x.n {
                    let xs = x.sample(i);
                    let gs = dy.sample(i);
                    let dxs = dx.sample_mut(i);
                    for (o, &g) in gs.iter().enumerate() {
                        let row = &wts[o * input..(o + 1) * input];
                        let grow = &mut grad[o * input..(o + 1) * input];
                        for j in 0..*input {
                            grow[j] += g * xs[j];
                            dxs[j] += g * row[j];
                        }
                        grad[out * input + o] += g;
                    }
                }
                (dx, grad)
            }
            (Layer::Relu, Cache::Input(x)) => {
                let mut dx = dy.clone();
                for (d, &xv) in dx.data.iter_mut().zip(&x.data) {
                    if xv <= 0.0 {
                        *d = 0.0;
                    }
                }
                (dx, Vec::new())
            }
            (Layer::BatchNorm { channels, params, .. }, Cache::Norm { xhat, inv_std, .. }) => {
                batchnorm_backward(dy, *channels, params, xhat, inv_std)
            }
            (Layer::Reshape { .. }, Cache::Shape((n, c, h, w))) => {
                (Tensor::from_data(*n, *c, *h, *w, dy.data.clone()), Vec::new())
            }
            (layer, _) => panic!("cache does not belong to a {} layer", layer.name()),
        }
    }

    /// Folds batch statistics from a training forward pass into the running averages.
    pub fn update_running_stats(&mut self, cache: &Cache) {
        if let (
            Layer::BatchNorm {
                running_mean,
                running_var,
                ..
            },
            Cache::Norm { mean, var, .. },
        ) = (self, cache)
        {
            for c in 0..mean.len() {
                running_mean[c] = (1.0 - BN_MOMENTUM) * running_mean[c] + BN_MOMENTUM * mean[c];
                running_var[c] = (1.0 - BN_MOMENTUM) * running_var[c] + BN_MOMENTUM * var[c];
            }
        }
    }
}

fn xavier(rng: &mut impl Rng, count: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..count).map(|_| rng.gen_range(-bound..bound)).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Valid output columns `[lo, hi)` for a kernel column offset `dx` on width `w`.
#[inline]
fn span(offset: isize, len: usize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (len as isize - offset).min(len as isize).max(0) as usize;
    (lo, hi.max(lo))
}

fn conv_forward(x: &Tensor, in_c: usize, out_c: usize, k: usize, params: &[f64]) -> Tensor {
    let (h, w) = (x.h, x.w);
    let pad = (k / 2) as isize;
    let (wts, bias) = params.split_at(out_c * in_c * k * k);
    let mut y = Tensor::zeros(x.n, out_c, h, w);
    for s in 0..x.n {
        for oc in 0..out_c {
            let mut plane = vec![bias[oc]; h * w];
            for ic in 0..in_c {
                let src = x.plane(s, ic);
                for ky in 0..k {
                    let dy = ky as isize - pad;
                    let (ylo, yhi) = span(dy, h);
                    for kx in 0..k {
                        let dx = kx as isize - pad;
                        let (xlo, xhi) = span(dx, w);
                        let wv = wts[((oc * in_c + ic) * k + ky) * k + kx];
                        for yy in ylo..yhi {
                            let iy = (yy as isize + dy) as usize;
                            let out_row = &mut plane[yy * w + xlo..yy * w + xhi];
                            let ix0 = (xlo as isize + dx) as usize;
                            let in_row = &src[iy * w + ix0..iy * w + ix0 + (xhi - xlo)];
                            for (o, i) in out_row.iter_mut().zip(in_row) {
                                *o += wv * i;
                            }
                        }
                    }
                }
            }
            y.plane_mut(s, oc).copy_from_slice(&plane);
        }
    }
    y
}

fn conv_backward(x: &Tensor, dy: &Tensor, in_c: usize, out_c: usize, k: usize, params: &[f64]) -> (Tensor, Vec<f64>) {
    let (h, w) = (x.h, x.w);
    let pad = (k / 2) as isize;
    let nw = out_c * in_c * k * k;
    let wts = &params[..nw];
    let mut grad = vec![0.0; params.len()];
    let mut dx = Tensor::zeros(x.n, in_c, h, w);
    for s in 0..x.n {
        for oc in 0..out_c {
            let g = dy.plane(s, oc);
            grad[nw + oc] += g.iter().sum::<f64>();
            for ic in 0..in_c {
                let src = x.plane(s, ic);
                for ky in 0..k {
                    let ddy = ky as isize - pad;
                    let (ylo, yhi) = span(ddy, h);
                    for kx in 0..k {
                        let ddx = kx as isize - pad;
                        let (xlo, xhi) = span(ddx, w);
                        let widx = ((oc * in_c + ic) * k + ky) * k + kx;
                        let wv = wts[widx];
                        let mut acc = 0.0;
                        let ix0 = (xlo as isize + ddx) as usize;
                        let len = xhi - xlo;
                        for yy in ylo..yhi {
                            let iy = (yy as isize + ddy) as usize;
                            let g_row = &g[yy * w + xlo..yy * w + xhi];
                            let in_row = &src[iy * w + ix0..iy * w + ix0 + len];
                            acc += dot(g_row, in_row);
                            let d_row = &mut dx.plane_mut(s, ic)[iy * w + ix0..iy * w + ix0 + len];
                            for (d, gv) in d_row.iter_mut().zip(g_row) {
                                *d += wv * gv;
                            }
                        }
                        grad[widx] += acc;
                    }
                }
            }
        }
    }
    (dx, grad)
}

fn pool_forward(x: &Tensor) -> (Tensor, Vec<usize>) {
    let (oh, ow) = (x.h / 2, x.w / 2);
    let mut y = Tensor::zeros(x.n, x.c, oh, ow);
    let mut argmax = Vec::with_capacity(y.data.len());
    for s in 0..x.n {
        for c in 0..x.c {
            let base = (s * x.c + c) * x.h * x.w;
            let src = x.plane(s, c);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = (f64::NEG_INFINITY, 0);
                    for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        let idx = (2 * oy + dy) * x.w + 2 * ox + dx;
                        if src[idx] > best.0 {
                            best = (src[idx], idx);
                        }
                    }
                    y.plane_mut(s, c)[oy * ow + ox] = best.0;
                    argmax.push(base + best.1);
                }
            }
        }
    }
    (y, argmax)
}

fn upsample_forward(x: &Tensor) -> Tensor {
    let (oh, ow) = (x.h * 2, x.w * 2);
    let mut y = Tensor::zeros(x.n, x.c, oh, ow);
    for s in 0..x.n {
        for c in 0..x.c {
            let src = x.plane(s, c);
            let dst = y.plane_mut(s, c);
            for yy in 0..oh {
                for xx in 0..ow {
                    dst[yy * ow + xx] = src[(yy / 2) * x.w + xx / 2];
                }
            }
        }
    }
    y
}

fn batchnorm_forward(
    x: &Tensor,
    channels: usize,
    params: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
    mode: Mode,
) -> (Tensor, Cache) {
    let (gamma, beta) = params.split_at(channels);
    let count = (x.n * x.h * x.w) as f64;
    let (mean, var) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0; channels];
            let mut var = vec![0.0; channels];
            for c in 0..channels {
                let mut sum = 0.0;
                for s in 0..x.n {
                    sum += x.plane(s, c).iter().sum::<f64>();
                }
                let m = sum / count;
                let mut sq = 0.0;
                for s in 0..x.n {
                    sq += x.plane(s, c).iter().map(|v| (v - m) * (v - m)).sum::<f64>();
                }
                mean[c] = m;
                var[c] = sq / count;
            }
            (mean, var)
        }
        Mode::Infer => (running_mean.to_vec(), running_var.to_vec()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = x.clone();
    let mut y = x.clone();
    for s in 0..x.n {
        for c in 0..channels {
            let xh = xhat.plane_mut(s, c);
            for v in xh.iter_mut() {
                *v = (*v - mean[c]) * inv_std[c];
            }
            let xh = xhat.plane(s, c).to_vec();
            for (o, v) in y.plane_mut(s, c).iter_mut().zip(xh) {
                *o = gamma[c] * v + beta[c];
            }
        }
    }
    (y, Cache::Norm { xhat, inv_std, mean, var })
}

fn batchnorm_backward(dy: &Tensor, channels: usize, params: &[f64], xhat: &Tensor, inv_std: &[f64]) -> (Tensor, Vec<f64>) {
    let gamma = &params[..channels];
    let count = (dy.n * dy.h * dy.w) as f64;
    let mut grad = vec![0.0; 2 * channels];
    let mut dx = Tensor::zeros(dy.n, dy.c, dy.h, dy.w);
    for c in 0..channels {
        let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
        for s in 0..dy.n {
            for (g, xh) in dy.plane(s, c).iter().zip(xhat.plane(s, c)) {
                sum_dy += g;
                sum_dy_xhat += g * xh;
            }
        }
        grad[c] = sum_dy_xhat;
        grad[channels + c] = sum_dy;
        let scale = gamma[c] * inv_std[c] / count;
        for s in 0..dy.n {
            let xh = xhat.plane(s, c);
            let g = dy.plane(s, c);
            for (i, d) in dx.plane_mut(s, c).iter_mut().enumerate() {
                *d = scale * (count * g[i] - sum_dy - xh[i] * sum_dy_xhat);
            }
        }
    }
    (dx, grad)
}
