//! Binary patch files stored next to detection CSVs.
//!
//! Layout: magic `LTPT`, `u32` version 1, `u64` count, `u32` channels,
//! height and width, then `count * c * h * w` bytes, one per pixel value
//! quantized to `k / 255`. Patches appear in detection-file order.

use std::path::Path;

use crate::detection::ImagePatch;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LTPT";
const VERSION: u32 = 1;

/// Encodes patches of identical shape. Values are rounded to the nearest `k / 255`.
pub fn patches_to_bytes(patches: &[&ImagePatch]) -> Result<Vec<u8>> {
    let shape = patches.first().map_or((0, 0, 0), |p| p.shape());
    if let Some(p) = patches.iter().find(|p| p.shape() != shape) {
        return Err(Error::ShapeMismatch {
            expected: format!("{shape:?}"),
            got: format!("{:?}", p.shape()),
        });
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(patches.len() as u64).to_le_bytes());
    for d in [shape.0, shape.1, shape.2] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for p in patches {
        out.extend(p.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    Ok(out)
}

pub fn patches_from_bytes(bytes: &[u8]) -> Result<Vec<ImagePatch>> {
    let bad = |m: &str| Error::Checkpoint(format!("patch file: {m}"));
    if bytes.len() < 28 || &bytes[..4] != MAGIC {
        return Err(bad("bad magic or truncated header"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    if u32_at(4) != VERSION as usize {
        return Err(bad("unsupported version"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let (c, h, w) = (u32_at(16), u32_at(20), u32_at(24));
    let len = c * h * w;
    let body = &bytes[28..];
    if body.len() != count * len {
        return Err(bad("payload size does not match header"));
    }
    body.chunks_exact(len.max(1))
        .take(count)
        .map(|chunk| ImagePatch::new(c, h, w, chunk.iter().map(|&b| b as f64 / 255.0).collect()))
        .collect()
}

pub fn write_patches(path: &Path, patches: &[&ImagePatch]) -> Result<()> {
    std::fs::write(path, patches_to_bytes(patches)?).map_err(|e| Error::io(path, e))
}

pub fn read_patches(path: &Path) -> Result<Vec<ImagePatch>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    patches_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantized_patches_roundtrip_exactly() {
        let a = ImagePatch::new(1, 2, 2, vec![0.0, 1.0, 128.0 / 255.0, 3.0 / 255.0]).unwrap();
        let b = ImagePatch::new(1, 2, 2, vec![1.0, 0.0, 0.5 + 0.5 / 255.0, 1.0 / 255.0]).unwrap();
        let bytes = patches_to_bytes(&[&a, &b]).unwrap();
        let back = patches_from_bytes(&bytes).unwrap();
        assert_eq!(back[0], a);
        assert_eq!(patches_to_bytes(&back.iter().collect::<Vec<_>>()).unwrap(), bytes);
        assert!(patches_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn rejects_mixed_shapes() {
        let a = ImagePatch::zeros(1, 2, 2);
        let b = ImagePatch::zeros(1, 3, 2);
        assert!(patches_to_bytes(&[&a, &b]).is_err());
    }
}
