use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Normalized pixel grid in channel-major layout, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePatch {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ImagePatch {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{channels}x{height}x{width} = {}", channels * height * width),
                got: format!("{} values", data.len()),
            });
        }
        Ok(ImagePatch {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        ImagePatch {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }
}

/// One detector output: a box in a frame with its confidence.
///
/// Frames are 1-based, as in MOTChallenge files.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u32,
    pub bbox: BBox,
    pub score: f64,
    pub image: Option<ImagePatch>,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, score: f64) -> Result<Self> {
        if frame < 1 {
            return Err(Error::InvalidBox("detection frame must be >= 1".into()));
        }
        bbox.validate()?;
        Ok(Detection {
            frame,
            bbox,
            score,
            image: None,
        })
    }

    pub fn with_image(mut self, image: ImagePatch) -> Self {
        self.image = Some(image);
        self
    }
}

/// Position of each detection within its frame, in list order (0-based).
///
/// Match tables refer to detections by `(frame, index)`; this is the inverse
/// of the dense node id used everywhere else.
pub fn index_within_frame(detections: &[Detection]) -> Vec<usize> {
    let mut seen: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
    detections
        .iter()
        .map(|d| {
            let slot = seen.entry(d.frame).or_insert(0);
            let idx = *slot;
            *slot += 1;
            idx
        })
        .collect()
}
