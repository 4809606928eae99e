//! Every uplink codec on the same random update: wire size, bits per
//! parameter and reconstruction error.
//!
//! cargo run --release --example codecs [dim]

use fedmrn::compressors::{
    compress_drive, compress_sign, compress_terngrad, compress_topk, decode_dense, decode_to_update, decompress_drive,
    decompress_sign, decompress_terngrad, decompress_topk, encode_dense, encode_mask, k_for_fraction, Payload,
};
use fedmrn::masking::{stochastic_mask, MaskMode};
use fedmrn::numeric::{streams, NoiseSpec, ParamVector, Prng};

fn report(name: &str, x: &[f64], p: &Payload, y: &ParamVector) -> fedmrn::Result<()> {
    // what the server sees must survive serialisation
    let wire = p.to_bytes();
    assert_eq!(&Payload::from_bytes(&wire)?, p);
    let err = x.iter().zip(y.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let bpp = 8.0 * wire.len() as f64 / x.len() as f64;
    println!("{name:>16} {:>9} {bpp:>7.3} {:>10.4}", wire.len(), err / norm);
    Ok(())
}

fn main() -> fedmrn::Result<()> {
    let dim: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let mut rng = Prng::from_seed(1, streams::PROBE);
    let x: Vec<f64> = (0..dim).map(|_| rng.gaussian(1e-3)).collect();
    println!("{:>16} {:>9} {:>7} {:>10}", "codec", "bytes", "bpp", "rel err");

    let p = encode_dense(&x);
    report("none", &x, &p, &decode_dense(&p)?)?;

    let noise = NoiseSpec::uniform(3e-3);
    let n = noise.generate(9, dim);
    for mode in [MaskMode::Binary, MaskMode::Signed] {
        let mask = stochastic_mask(&x, &n, mode, &mut rng)?;
        let p = encode_mask(&mask, 9);
        report(
            &format!("mrn_{mode:?}").to_lowercase(),
            &x,
            &p,
            &decode_to_update(&p, &noise)?,
        )?;
    }

    let p = compress_sign(&x, &mut rng)?;
    report("sign_stochastic", &x, &p, &decompress_sign(&p)?)?;
    let p = compress_topk(&x, k_for_fraction(dim, 0.03))?;
    report("topk", &x, &p, &decompress_topk(&p)?)?;
    let p = compress_terngrad(&x, &mut rng)?;
    report("terngrad", &x, &p, &decompress_terngrad(&p)?)?;
    let p = compress_drive(&x, 5)?;
    report("drive", &x, &p, &decompress_drive(&p)?)?;
    Ok(())
}
