use crate::detection::ImagePatch;
use crate::error::{Error, Result};

/// Dense batch of feature maps in NCHW layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Tensor {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    pub fn from_data(n: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * c * h * w, "tensor data length");
        Tensor { n, c, h, w, data }
    }

    /// Stacks patches of identical shape into a batch.
    pub fn from_patches(patches: &[&ImagePatch]) -> Result<Self> {
        let Some(first) = patches.first() else {
            return Err(Error::ShapeMismatch {
                expected: "non-empty batch".into(),
                got: "0 images".into(),
            });
        };
        let (c, h, w) = first.shape();
        let mut data = Vec::with_capacity(patches.len() * c * h * w);
        for p in patches {
            if p.shape() != (c, h, w) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{c}x{h}x{w}"),
                    got: format!("{}x{}x{}", p.channels, p.height, p.width),
                });
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Tensor::from_data(patches.len(), c, h, w, data))
    }

    pub fn sample_len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let len = self.sample_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [f64] {
        let len = self.sample_len();
        &mut self.data[i * len..(i + 1) * len]
    }

    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let hw = self.h * self.w;
        let start = (n * self.c + c) * hw;
        &self.data[start..start + hw]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let hw = self.h * self.w;
        let start = (n * self.c + c) * hw;
        &mut self.data[start..start + hw]
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }
}
