use super::bits::{pack_bits, unpack_bits};
use super::payload::{CodecId, Payload};
use crate::error::{Error, Result};
use crate::numeric::{ParamVector, Prng};

/// Stochastic 1-bit quantisation with scale `α = mean|x|`.
///
/// Coordinate `i` becomes `+α` with probability `clip((x_i + α)/(2α), 0, 1)`
/// and `-α` otherwise, which is unbiased wherever `|x_i| ≤ α`.
pub fn compress_sign(x: &[f64], rng: &mut Prng) -> Result<Payload> {
    if x.is_empty() {
        return Err(Error::invalid("cannot compress an empty vector"));
    }
    let alpha = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    let bits: Vec<bool> = if alpha == 0.0 {
        vec![false; x.len()]
    } else {
        x.iter()
            .map(|&v| rng.bernoulli(((v + alpha) / (2.0 * alpha)).clamp(0.0, 1.0)))
            .collect()
    };
    Ok(Payload {
        codec: CodecId::SignStochastic,
        dim: x.len(),
        seed: 0,
        scalars: vec![alpha],
        body: pack_bits(&bits),
    })
}

pub fn decompress_sign(p: &Payload) -> Result<ParamVector> {
    if p.codec != CodecId::SignStochastic {
        return Err(Error::Decode(format!("{} payload is not sign-compressed", p.codec)));
    }
    p.validate()?;
    let alpha = p.scalars[0];
    Ok(unpack_bits(&p.body, p.dim)
        .into_iter()
        .map(|b| if b { alpha } else { -alpha })
        .map(|v| if alpha == 0.0 { 0.0 } else { v })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::streams;

    #[test]
    fn two_coordinate_expectation() {
        // x = [c, -c]: alpha = c, p = [1, 0], so the outcome is forced.
        let c = 0.7;
        let mut rng = Prng::from_seed(1, streams::CODEC);
        for _ in 0..20 {
            let p = compress_sign(&[c, -c], &mut rng).unwrap();
            assert_eq!(p.scalars, vec![c]);
            assert_eq!(decompress_sign(&p).unwrap().as_slice(), &[c, -c]);
        }
    }

    #[test]
    fn zero_vector() {
        let mut rng = Prng::from_seed(1, streams::CODEC);
        let p = compress_sign(&[0.0; 9], &mut rng).unwrap();
        assert_eq!(p.body.len(), 2);
        assert_eq!(p.payload_bytes(), 20 + 8 + 2);
        assert_eq!(decompress_sign(&p).unwrap(), ParamVector::zeros(9));
    }
}
