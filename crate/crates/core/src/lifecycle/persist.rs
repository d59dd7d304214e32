//! `FCW1` weight files: magic, the spec as seven little-endian u32s, every
//! weight array in declaration order as little-endian f64, then a 64-bit
//! FNV-1a checksum over the spec and weight bytes. Carry state is not stored.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::nn::{NetworkModel, NetworkSpec, ParamSet};

pub const MAGIC: &[u8; 4] = b"FCW1";
const SPEC_BYTES: usize = 7 * 4;

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn spec_fields(spec: &NetworkSpec) -> [u32; 7] {
    [
        spec.input_lags as u32,
        spec.input_loops as u32,
        spec.conv_filters as u32,
        spec.conv_kernel as u32,
        spec.lstm_cells as u32,
        spec.dense_units as u32,
        spec.stateful as u32,
    ]
}

pub fn encode_model(model: &NetworkModel) -> Vec<u8> {
    let mut payload = Vec::with_capacity(SPEC_BYTES + 8 * model.param_count());
    for field in spec_fields(model.spec()) {
        payload.extend_from_slice(&field.to_le_bytes());
    }
    for w in model.params().iter() {
        payload.extend_from_slice(&w.to_le_bytes());
    }
    let mut out = Vec::with_capacity(payload.len() + 12);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&fnv1a64(&payload).to_le_bytes());
    out
}

pub fn save_model(model: &NetworkModel, mut sink: impl Write) -> Result<()> {
    sink.write_all(&encode_model(model))?;
    sink.flush()?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptFile(msg.into())
}

/// Decodes a model; its carry state starts at zero and its seed is 0.
pub fn decode_model(bytes: &[u8]) -> Result<NetworkModel> {
    if bytes.len() < 4 || &bytes[..3] != b"FCW" {
        return Err(corrupt("missing FCW magic"));
    }
    if bytes[3] != MAGIC[3] {
        return Err(corrupt(format!(
            "unsupported format version {:?}",
            bytes[3] as char
        )));
    }
    if bytes.len() < 4 + SPEC_BYTES + 8 {
        return Err(corrupt("file truncated inside the header"));
    }
    let payload = &bytes[4..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    let field =
        |i: usize| u32::from_le_bytes(payload[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let spec = NetworkSpec {
        input_lags: field(0),
        input_loops: field(1),
        conv_filters: field(2),
        conv_kernel: field(3),
        lstm_cells: field(4),
        dense_units: field(5),
        stateful: match field(6) {
            0 => false,
            1 => true,
            other => return Err(corrupt(format!("stateful flag {other} is not 0 or 1"))),
        },
    };
    spec.validate().map_err(|e| corrupt(e.to_string()))?;
    let expected = SPEC_BYTES + 8 * spec.param_count();
    if payload.len() != expected {
        return Err(corrupt(format!(
            "payload is {} bytes, spec requires {expected}",
            payload.len()
        )));
    }
    if fnv1a64(payload) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let mut params = ParamSet::zeros(&spec);
    let mut chunks = payload[SPEC_BYTES..].chunks_exact(8);
    for array in params.arrays_mut() {
        for (w, c) in array.iter_mut().zip(&mut chunks) {
            *w = f64::from_le_bytes(c.try_into().unwrap());
        }
    }
    NetworkModel::from_params(spec, params, 0).map_err(|e| corrupt(e.to_string()))
}

pub fn load_model(mut source: impl Read) -> Result<NetworkModel> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_model(&bytes)
}
