//! Model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `LTAE` |
//! | 4     | format version, `u32` = 1 |
//! | 8     | header length `L`, `u64` |
//! | L     | UTF-8 JSON header: `arch`, `seed`, `epoch`, `tensors` |
//! | ...   | tensor payloads as `f64` little-endian, in header order |
//!
//! `tensors` lists `{ "layer": i, "name": n, "len": k }` where `i` counts
//! encoder layers first, then decoder layers, and `n` is `params`,
//! `running_mean` or `running_var`. Values are stored bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layers::Layer;
use super::model::{ArchConfig, AutoEncoderModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LTAE";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    layer: usize,
    name: String,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: ArchConfig,
    seed: u64,
    epoch: usize,
    tensors: Vec<TensorEntry>,
}

fn tensors_of(layer: &Layer) -> Vec<(&'static str, &[f64])> {
    match layer {
        Layer::BatchNorm {
            params,
            running_mean,
            running_var,
            ..
        } => vec![
            ("params", params.as_slice()),
            ("running_mean", running_mean.as_slice()),
            ("running_var", running_var.as_slice()),
        ],
        other if !other.params().is_empty() => vec![("params", other.params())],
        _ => Vec::new(),
    }
}

fn tensor_mut<'a>(layer: &'a mut Layer, name: &str) -> Option<&'a mut Vec<f64>> {
    match (layer, name) {
        (Layer::Conv { params, .. } | Layer::Dense { params, .. } | Layer::BatchNorm { params, .. }, "params") => {
            Some(params)
        }
        (Layer::BatchNorm { running_mean, .. }, "running_mean") => Some(running_mean),
        (Layer::BatchNorm { running_var, .. }, "running_var") => Some(running_var),
        _ => None,
    }
}

pub fn to_bytes(model: &AutoEncoderModel) -> Vec<u8> {
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    for (i, layer) in model.layers().enumerate() {
        for (name, values) in tensors_of(layer) {
            tensors.push(TensorEntry {
                layer: i,
                name: name.to_string(),
                len: values.len(),
            });
            for v in values {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let header = Header {
        arch: model.arch.clone(),
        seed: model.seed,
        epoch: model.epoch,
        tensors,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

pub fn from_bytes(mut bytes: &[u8]) -> Result<AutoEncoderModel> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let mut take = |n: usize| -> Result<&[u8]> {
        if bytes.len() < n {
            return Err(bad("truncated checkpoint"));
        }
        let (head, rest) = bytes.split_at(n);
        bytes = rest;
        Ok(head)
    };
    if take(4)? != MAGIC {
        return Err(bad("not a model checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let hlen = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let header: Header =
        serde_json::from_slice(take(hlen)?).map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    let mut model = AutoEncoderModel::new(header.arch, header.seed)?;
    model.epoch = header.epoch;
    let layer_count = model.layers().count();
    for entry in &header.tensors {
        if entry.layer >= layer_count {
            return Err(Error::Checkpoint(format!("tensor for missing layer {}", entry.layer)));
        }
        let raw = take(entry.len * 8)?;
        let layer = model.layers_mut().nth(entry.layer).unwrap();
        let target = tensor_mut(layer, &entry.name)
            .ok_or_else(|| Error::Checkpoint(format!("layer {} has no tensor {}", entry.layer, entry.name)))?;
        if target.len() != entry.len {
            return Err(Error::Checkpoint(format!(
                "tensor {} of layer {} has {} values, expected {}",
                entry.name,
                entry.layer,
                entry.len,
                target.len()
            )));
        }
        for (t, chunk) in target.iter_mut().zip(raw.chunks_exact(8)) {
            *t = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    if !bytes.is_empty() {
        return Err(bad("trailing bytes after tensors"));
    }
    Ok(model)
}

pub fn save(model: &AutoEncoderModel, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<AutoEncoderModel> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}
