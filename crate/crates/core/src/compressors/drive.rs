//! DRIVE: rotate, keep signs, rescale by the least-squares scale.

use super::bits::{pack_bits, unpack_bits};
use super::payload::{CodecId, Payload};
use crate::error::{Error, Result};
use crate::numeric::{streams, ParamVector, Prng};

/// Which orthonormal map to apply before taking signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    /// Seeded random ±1 diagonal followed by the normalised Walsh-Hadamard
    /// transform, on the input zero-padded to a power of two.
    Hadamard,
    /// No rotation, no padding. Test hook.
    Identity,
}

/// In-place unnormalised fast Walsh-Hadamard transform. Length must be a
/// power of two.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

fn diagonal(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = Prng::from_seed(seed, streams::CODEC);
    (0..n).map(|_| rng.two_point(1.0)).collect()
}

/// `R x` for the seeded randomized Hadamard rotation, output length is the
/// next power of two.
pub fn rotate(x: &[f64], seed: u64) -> Vec<f64> {
    let n = x.len().next_power_of_two();
    let d = diagonal(seed, n);
    let mut v: Vec<f64> = (0..n).map(|i| x.get(i).copied().unwrap_or(0.0) * d[i]).collect();
    fwht(&mut v);
    let scale = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|a| *a *= scale);
    v
}

/// `R⁻¹ y`, truncated to the first `dim` coordinates.
pub fn unrotate(y: &[f64], seed: u64, dim: usize) -> Vec<f64> {
    let n = y.len();
    let d = diagonal(seed, n);
    let mut v = y.to_vec();
    fwht(&mut v);
    let scale = 1.0 / (n as f64).sqrt();
    v.iter().zip(&d).take(dim).map(|(a, s)| a * scale * s).collect()
}

pub fn compress_drive(x: &[f64], seed: u64) -> Result<Payload> {
    compress_drive_with(x, seed, Rotation::Hadamard)
}

pub fn compress_drive_with(x: &[f64], seed: u64, rotation: Rotation) -> Result<Payload> {
    if x.is_empty() {
        return Err(Error::invalid("cannot compress an empty vector"));
    }
    let y = match rotation {
        Rotation::Hadamard => rotate(x, seed),
        Rotation::Identity => x.to_vec(),
    };
    // <y, sign(y)> / |sign(y)|² minimises ‖y − α·sign(y)‖.
    let alpha = y.iter().map(|v| v.abs()).sum::<f64>() / y.len() as f64;
    let bits: Vec<bool> = y.iter().map(|&v| v >= 0.0).collect();
    Ok(Payload {
        codec: CodecId::Drive,
        dim: x.len(),
        seed,
        scalars: vec![alpha],
        body: pack_bits(&bits),
    })
}

pub fn decompress_drive(p: &Payload) -> Result<ParamVector> {
    decompress_drive_with(p, Rotation::Hadamard)
}

pub fn decompress_drive_with(p: &Payload, rotation: Rotation) -> Result<ParamVector> {
    if p.codec != CodecId::Drive {
        return Err(Error::Decode(format!("{} payload is not DRIVE", p.codec)));
    }
    p.validate()?;
    let n = match rotation {
        Rotation::Hadamard => p.dim.next_power_of_two(),
        Rotation::Identity => p.dim,
    };
    if p.body.len() != n.div_ceil(8) {
        return Err(Error::Decode("DRIVE body does not match the rotation size".into()));
    }
    let alpha = p.scalars[0];
    let y: Vec<f64> = unpack_bits(&p.body, n)
        .into_iter()
        .map(|b| if b { alpha } else { -alpha })
        .collect();
    Ok(match rotation {
        Rotation::Hadamard => unrotate(&y, p.seed, p.dim).into(),
        Rotation::Identity => y.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rotation_least_squares() {
        let p = compress_drive_with(&[3.0, -1.0], 0, Rotation::Identity).unwrap();
        assert_eq!(p.scalars, vec![2.0]);
        assert_eq!(
            decompress_drive_with(&p, Rotation::Identity).unwrap().as_slice(),
            &[2.0, -2.0]
        );
    }

    #[test]
    fn rotation_roundtrip() {
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = rotate(&x, 11);
        assert_eq!(y.len(), 64);
        let back = unrotate(&y, 11, 37);
        let err: f64 = back.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-12 * norm);
        // orthonormal: norms preserved
        let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((ny - norm).abs() < 1e-12 * norm);
    }

    #[test]
    fn padded_body_size() {
        let p = compress_drive(&vec![1.0; 100], 3).unwrap();
        assert_eq!(p.body.len(), 16);
        assert_eq!(p.payload_bytes(), 20 + 8 + 16);
    }
}
