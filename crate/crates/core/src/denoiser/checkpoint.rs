//! Checkpoint format: one line of JSON describing every tensor, then the raw
//! little-endian f64 payload. Normalization statistics are stored in the
//! payload too (as `norm.<channel>` = `[mean, std]`) so they survive
//! bit-exactly; the header copy is for humans.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{write_atomic, CHANNELS};
use crate::trainer::NormStats;

use super::model::{build_model_with_window, DenoiserModel, MODEL_VERSION};
use crate::nn::Parameters;

const FORMAT_NAME: &str = "cprlab-denoiser";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the payload.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub window: usize,
    pub stride: usize,
    pub norm_stats: BTreeMap<String, NormStats>,
    pub tensors: Vec<TensorEntry>,
    pub payload_bytes: usize,
}

fn collect(model: &DenoiserModel) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mut out = Vec::new();
    for (name, layer) in model.net.named_layers() {
        let (rows, cols) = layer.weights.shape();
        out.push((format!("{name}.weights"), vec![rows, cols], layer.weights.data().to_vec()));
        out.push((format!("{name}.bias"), vec![layer.bias.len()], layer.bias.clone()));
    }
    for (c, ns) in &model.norm_stats {
        out.push((format!("norm.{c}"), vec![2], vec![ns.mean, ns.std]));
    }
    out
}

pub fn encode_model(model: &DenoiserModel) -> Result<Vec<u8>> {
    model.validate()?;
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    for (name, shape, values) in collect(model) {
        tensors.push(TensorEntry {
            name,
            shape,
            offset: payload.len(),
        });
        for v in values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = CheckpointHeader {
        format: FORMAT_NAME.into(),
        version: model.version,
        window: model.window,
        stride: model.stride,
        norm_stats: model
            .norm_stats
            .iter()
            .map(|(c, ns)| (c.name().to_string(), *ns))
            .collect(),
        tensors,
        payload_bytes: payload.len(),
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    bytes.extend_from_slice(&payload);
    Ok(bytes)
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn decode_model(bytes: &[u8]) -> Result<DenoiserModel> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err("checkpoint header is not newline-terminated"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| format_err(format!("bad checkpoint header: {e}")))?;
    if header.format != FORMAT_NAME {
        return Err(format_err(format!("unknown checkpoint format {:?}", header.format)));
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Version {
            found: header.version,
            supported: MODEL_VERSION,
        });
    }
    let payload = &bytes[nl + 1..];
    if payload.len() != header.payload_bytes {
        return Err(format_err(format!(
            "payload has {} bytes, header says {}",
            payload.len(),
            header.payload_bytes
        )));
    }
    if header.window == 0 || header.window % 4 != 0 {
        return Err(format_err(format!("invalid window {}", header.window)));
    }

    // The architecture is fixed, so build a skeleton and fill it in. The
    // header must list exactly the skeleton's tensors in order.
    let mut model = build_model_with_window(0, header.window);
    model.stride = header.stride;
    let expected = collect(&model);
    if expected.len() != header.tensors.len() {
        return Err(format_err(format!(
            "expected {} tensors, header lists {}",
            expected.len(),
            header.tensors.len()
        )));
    }
    let mut values = Vec::with_capacity(expected.len());
    for ((name, shape, _), entry) in expected.iter().zip(&header.tensors) {
        if *name != entry.name || *shape != entry.shape {
            return Err(format_err(format!(
                "tensor {} {:?} does not match expected {} {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
        let n: usize = shape.iter().product();
        let end = entry
            .offset
            .checked_add(n * 8)
            .filter(|&e| e <= payload.len())
            .ok_or_else(|| format_err(format!("tensor {name} runs past the payload")))?;
        let v: Vec<f64> = payload[entry.offset..end]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        values.push(v);
    }

    let n_params = model.net.param_slices().len();
    for (dst, src) in model.net.param_slices_mut().into_iter().zip(&values[..n_params]) {
        dst.copy_from_slice(src);
    }
    for (c, v) in CHANNELS.iter().zip(&values[n_params..]) {
        model.norm_stats.insert(
            *c,
            NormStats {
                mean: v[0],
                std: v[1],
            },
        );
    }
    model
        .validate()
        .map_err(|e| format_err(format!("checkpoint holds an invalid model: {e}")))?;
    Ok(model)
}

pub fn save_model(model: &DenoiserModel, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<DenoiserModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
