use super::bits::{pack_2bit, unpack_2bit};
use super::payload::{CodecId, Payload};
use crate::error::{Error, Result};
use crate::numeric::{ParamVector, Prng};

const ZERO: u8 = 0;
const PLUS: u8 = 1;
const MINUS: u8 = 2;

/// Ternary quantisation with scale `s = max|x|`: coordinate `i` becomes
/// `sign(x_i)·s` with probability `|x_i|/s`, else zero. Two bits per
/// coordinate on the wire.
pub fn compress_terngrad(x: &[f64], rng: &mut Prng) -> Result<Payload> {
    if x.is_empty() {
        return Err(Error::invalid("cannot compress an empty vector"));
    }
    let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let symbols: Vec<u8> = x
        .iter()
        .map(|&v| {
            if s == 0.0 || !rng.bernoulli(v.abs() / s) {
                ZERO
            } else if v > 0.0 {
                PLUS
            } else {
                MINUS
            }
        })
        .collect();
    Ok(Payload {
        codec: CodecId::Terngrad,
        dim: x.len(),
        seed: 0,
        scalars: vec![s],
        body: pack_2bit(&symbols),
    })
}

pub fn decompress_terngrad(p: &Payload) -> Result<ParamVector> {
    if p.codec != CodecId::Terngrad {
        return Err(Error::Decode(format!("{} payload is not ternary", p.codec)));
    }
    p.validate()?;
    let s = p.scalars[0];
    unpack_2bit(&p.body, p.dim)
        .into_iter()
        .map(|sym| match sym {
            ZERO => Ok(0.0),
            PLUS => Ok(s),
            MINUS => Ok(-s),
            _ => Err(Error::Decode("invalid ternary symbol".into())),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::streams;

    #[test]
    fn max_coordinate_is_deterministic() {
        let mut rng = Prng::from_seed(2, streams::CODEC);
        let mut ones = 0;
        for _ in 0..2000 {
            let y = decompress_terngrad(&compress_terngrad(&[0.5, -1.0], &mut rng).unwrap()).unwrap();
            assert_eq!(y[1], -1.0);
            assert!(y[0] == 0.0 || y[0] == 1.0);
            ones += (y[0] == 1.0) as usize;
        }
        // Binomial(2000, 0.5): sd ≈ 22.4
        assert!((ones as f64 - 1000.0).abs() < 4.0 * 22.4);
    }

    #[test]
    fn zero_vector_and_size() {
        let mut rng = Prng::from_seed(2, streams::CODEC);
        let p = compress_terngrad(&[0.0; 5], &mut rng).unwrap();
        assert_eq!(p.payload_bytes(), 20 + 8 + 2);
        assert_eq!(decompress_terngrad(&p).unwrap(), ParamVector::zeros(5));
    }
}
