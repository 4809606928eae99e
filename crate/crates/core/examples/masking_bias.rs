//! Stochastic masking is unbiased; deterministic (sign-agreement) masking is
//! not. Prints mean masked value against the target update for a few
//! (u, n) pairs in both mask modes.
//!
//! cargo run --release --example masking_bias

use fedmrn::masking::{deterministic_mask, stochastic_mask, MaskMode};
use fedmrn::numeric::{streams, Prng};

fn main() -> fedmrn::Result<()> {
    let draws = 100_000;
    println!("{:>7} {:>8} {:>6} {:>12} {:>12}", "mode", "u", "n", "E[SM]", "DM");
    for mode in [MaskMode::Binary, MaskMode::Signed] {
        for (u, n) in [(0.003, 0.01), (0.007, 0.01), (-0.004, 0.01), (0.0, 0.01)] {
            let uu = vec![u; draws];
            let nn = vec![n; draws];
            let mut rng = Prng::from_seed(0, streams::MASK);
            let sm = stochastic_mask(&uu, &nn, mode, &mut rng)?.apply(&nn)?;
            let mean = sm.iter().sum::<f64>() / draws as f64;
            let dm = deterministic_mask(&uu[..1], &nn[..1], mode)?.apply(&nn[..1])?[0];
            println!("{:>7} {u:>8} {n:>6} {mean:>12.6} {dm:>12.6}", format!("{mode:?}"));
        }
    }
    Ok(())
}
