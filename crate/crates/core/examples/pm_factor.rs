//! Progressive masking lowers the average masking error during local
//! training. Compares the simulated reduction against the closed forms for
//! a range of local step counts.
//!
//! cargo run --release --example pm_factor

use fedmrn::analysis::verify_pm_factor;
use fedmrn::masking::MaskMode;
use fedmrn::numeric::NoiseSpec;

fn main() -> fedmrn::Result<()> {
    let noise = NoiseSpec::uniform(1e-2);
    println!(
        "{:>4} {:>10} {:>12} {:>12} {:>8}",
        "S", "simulated", "Σ τ²/S³", "(S+1)/2S", "q_base"
    );
    for steps in [1, 2, 5, 10, 20, 50] {
        let c = verify_pm_factor(64, steps, &noise, MaskMode::Signed, 10_000, 7)?;
        println!(
            "{:>4} {:>10.5} {:>12.5} {:>12.5} {:>8.4}",
            steps, c.empirical, c.analytic, c.analytic_iid_gates, c.q_base
        );
    }
    Ok(())
}
