//! Mask training against local SGD on a strongly convex quadratic, with the
//! inverse-time step size. Prints the optimality gap every 50 rounds and
//! the fitted log-log slopes.
//!
//! cargo run --release --example strongly_convex_rate

use fedmrn::analysis::{strongly_convex_comparison, ConvexSetup};

fn main() -> fedmrn::Result<()> {
    let setup = ConvexSetup::default();
    let c = strongly_convex_comparison(&setup)?;
    println!("G = {:.4}", c.grad_bound);
    println!("{:>6} {:>14} {:>14}", "round", "fedmrn gap", "fedavg gap");
    for t in (0..setup.rounds).step_by(50).chain(std::iter::once(setup.rounds - 1)) {
        println!("{:>6} {:>14.6e} {:>14.6e}", t + 1, c.fedmrn_gaps[t], c.fedavg_gaps[t]);
    }
    println!("slope fedmrn {:.3}, fedavg {:.3}", c.fedmrn_slope, c.fedavg_slope);
    println!("final gap ratio {:.3}", c.final_gap_ratio());
    println!("clipped coordinates {}", c.clipped_coordinates);
    Ok(())
}
