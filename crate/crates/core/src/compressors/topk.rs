use super::payload::{CodecId, Payload};
use crate::error::{Error, Result};
use crate::numeric::ParamVector;

/// Bytes per kept entry: `u32` index plus `f64` value.
pub const TOPK_ENTRY_BYTES: usize = 12;

/// Keeps the `k` largest-magnitude entries. Ties go to the lower index.
pub fn compress_topk(x: &[f64], k: usize) -> Result<Payload> {
    if k == 0 || k > x.len() {
        return Err(Error::invalid(format!("top-k: k = {k} outside 1..={}", x.len())));
    }
    if x.len() > u32::MAX as usize {
        return Err(Error::invalid("top-k: dimension exceeds u32 indices"));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    let mut body = Vec::with_capacity(k * TOPK_ENTRY_BYTES);
    for i in kept {
        body.extend_from_slice(&(i as u32).to_le_bytes());
        body.extend_from_slice(&x[i].to_le_bytes());
    }
    Ok(Payload {
        codec: CodecId::Topk,
        dim: x.len(),
        seed: 0,
        scalars: Vec::new(),
        body,
    })
}

pub fn decompress_topk(p: &Payload) -> Result<ParamVector> {
    if p.codec != CodecId::Topk {
        return Err(Error::Decode(format!("{} payload is not top-k", p.codec)));
    }
    p.validate()?;
    let mut out = ParamVector::zeros(p.dim);
    for entry in p.body.chunks_exact(TOPK_ENTRY_BYTES) {
        let i = u32::from_le_bytes(entry[..4].try_into().unwrap()) as usize;
        if i >= p.dim {
            return Err(Error::Decode(format!("top-k index {i} out of range")));
        }
        out[i] = f64::from_le_bytes(entry[4..].try_into().unwrap());
    }
    Ok(out)
}

/// Number of entries kept for a keep fraction, at least one.
pub fn k_for_fraction(dim: usize, fraction: f64) -> usize {
    ((dim as f64 * fraction).ceil() as usize).clamp(1, dim)
}
