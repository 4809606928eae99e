//! Uplink codecs sharing one versioned payload format.
//!
//! Header layout (little-endian): codec id `u8`, format version `u8`,
//! dimension `u64`, seed `u64`, scalar count `u16`, then that many `f64`
//! scalars, then the codec body. Bit-packed bodies are LSB-first within each
//! byte.
//!
//! | codec             | scalars | body                                   |
//! |-------------------|---------|----------------------------------------|
//! | `none`            | 0       | `4·d` bytes, `f32` per coordinate      |
//! | `mrn_binary`      | 0       | `⌈d/8⌉` mask bytes                     |
//! | `mrn_signed`      | 0       | `⌈d/8⌉` mask bytes                     |
//! | `sign_stochastic` | `α`     | `⌈d/8⌉` sign bytes                     |
//! | `topk`            | 0       | `k·12` bytes of (`u32` index, `f64`)   |
//! | `terngrad`        | `s`     | `⌈2d/8⌉` bytes, 2 bits per coordinate  |
//! | `drive`           | `α`     | `⌈d'/8⌉` sign bytes, `d'` = next pow2  |
//!
//! TernGrad's information content is `log2(3)` bits per coordinate; the
//! wire format spends two, and byte accounting reports what is actually
//! sent.

mod bits;
mod dense;
mod drive;
mod mask;
mod payload;
mod sign;
mod terngrad;
mod topk;

pub use bits::{pack_2bit, pack_bits, unpack_2bit, unpack_bits};
pub use dense::{decode_dense, dense_payload_bytes, encode_dense};
pub use drive::{
    compress_drive, compress_drive_with, decompress_drive, decompress_drive_with, fwht, rotate, unrotate, Rotation,
};
pub use mask::{decode_mask, decode_to_update, encode_mask};
pub use payload::{CodecId, Payload, FORMAT_VERSION, HEADER_BYTES};
pub use sign::{compress_sign, decompress_sign};
pub use terngrad::{compress_terngrad, decompress_terngrad};
pub use topk::{compress_topk, decompress_topk, k_for_fraction, TOPK_ENTRY_BYTES};

use crate::error::{Error, Result};
use crate::numeric::{NoiseSpec, ParamVector};

/// Decodes any payload. Mask payloads need the noise spec used to generate
/// their noise.
pub fn decode(p: &Payload, noise: Option<&NoiseSpec>) -> Result<ParamVector> {
    match p.codec {
        CodecId::None => decode_dense(p),
        CodecId::MrnBinary | CodecId::MrnSigned => {
            let spec = noise.ok_or_else(|| Error::Decode("mask payload needs a noise spec".into()))?;
            decode_to_update(p, spec)
        }
        CodecId::SignStochastic => decompress_sign(p),
        CodecId::Topk => decompress_topk(p),
        CodecId::Terngrad => decompress_terngrad(p),
        CodecId::Drive => decompress_drive(p),
    }
}

/// Serialized size in bytes.
pub fn payload_bytes(p: &Payload) -> usize {
    p.payload_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::{MaskMode, MaskVector};
    use crate::numeric::{streams, Prng};
    use proptest::prelude::*;

    fn expected_size(codec: CodecId, d: usize, k: usize) -> usize {
        HEADER_BYTES
            + match codec {
                CodecId::None => 4 * d,
                CodecId::MrnBinary | CodecId::MrnSigned => d.div_ceil(8),
                CodecId::SignStochastic => 8 + d.div_ceil(8),
                CodecId::Topk => k * 12,
                CodecId::Terngrad => 8 + (2 * d).div_ceil(8),
                CodecId::Drive => 8 + d.next_power_of_two().div_ceil(8),
            }
    }

    proptest! {
        #[test]
        fn size_law(d in 1usize..=1000, seed: u64) {
            let x: Vec<f64> = (0..d).map(|i| ((i as f64) * 0.77 + seed as f64 % 13.0).sin()).collect();
            let mut rng = Prng::from_seed(seed, streams::CODEC);
            let k = k_for_fraction(d, 0.03);
            let payloads = vec![
                encode_dense(&x),
                encode_mask(&MaskVector::zeros(d, MaskMode::Binary), seed),
                encode_mask(&MaskVector::zeros(d, MaskMode::Signed), seed),
                compress_sign(&x, &mut rng).unwrap(),
                compress_topk(&x, k).unwrap(),
                compress_terngrad(&x, &mut rng).unwrap(),
                compress_drive(&x, seed).unwrap(),
            ];
            for p in payloads {
                let bytes = p.to_bytes();
                prop_assert_eq!(bytes.len(), payload_bytes(&p));
                prop_assert_eq!(bytes.len(), expected_size(p.codec, d, k));
                let back = Payload::from_bytes(&bytes).unwrap();
                let noise = NoiseSpec::uniform(0.01);
                prop_assert_eq!(decode(&back, Some(&noise)).unwrap(), decode(&p, Some(&noise)).unwrap());
            }
        }
    }

    #[test]
    fn mask_decode_requires_noise() {
        let p = encode_mask(&MaskVector::zeros(4, MaskMode::Binary), 1);
        assert!(decode(&p, None).is_err());
    }
}
