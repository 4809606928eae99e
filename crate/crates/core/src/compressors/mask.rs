use super::bits::{pack_bits, unpack_bits};
use super::payload::{CodecId, Payload};
use crate::error::{Error, Result};
use crate::masking::{MaskMode, MaskVector};
use crate::numeric::{NoiseSpec, ParamVector};

/// Packs a mask and the seed of the noise it masks.
pub fn encode_mask(mask: &MaskVector, seed: u64) -> Payload {
    let codec = match mask.mode() {
        MaskMode::Binary => CodecId::MrnBinary,
        MaskMode::Signed => CodecId::MrnSigned,
    };
    Payload {
        codec,
        dim: mask.len(),
        seed,
        scalars: Vec::new(),
        body: pack_bits(mask.bits()),
    }
}

pub fn decode_mask(p: &Payload) -> Result<MaskVector> {
    let mode = match p.codec {
        CodecId::MrnBinary => MaskMode::Binary,
        CodecId::MrnSigned => MaskMode::Signed,
        other => return Err(Error::Decode(format!("{other} payload is not a mask"))),
    };
    p.validate()?;
    Ok(MaskVector::new(unpack_bits(&p.body, p.dim), mode))
}

/// Regenerates `G(seed)` and returns `G(seed) ⊙ mask`.
pub fn decode_to_update(p: &Payload, noise: &NoiseSpec) -> Result<ParamVector> {
    let mask = decode_mask(p)?;
    let g = noise.generate(p.seed, p.dim);
    mask.apply(&g)
}
