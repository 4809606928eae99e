use super::payload::{CodecId, Payload};
use crate::error::{Error, Result};
use crate::numeric::ParamVector;

/// Full-precision reference uplink: one little-endian `f32` per coordinate.
pub fn encode_dense(x: &[f64]) -> Payload {
    Payload {
        codec: CodecId::None,
        dim: x.len(),
        seed: 0,
        scalars: Vec::new(),
        body: x.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect(),
    }
}

pub fn decode_dense(p: &Payload) -> Result<ParamVector> {
    if p.codec != CodecId::None {
        return Err(Error::Decode(format!("{} payload is not dense", p.codec)));
    }
    p.validate()?;
    Ok(p.body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect())
}

/// Serialized size of a dense update of dimension `dim`.
pub fn dense_payload_bytes(dim: usize) -> usize {
    super::payload::HEADER_BYTES + 4 * dim
}
