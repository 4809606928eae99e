//! Measures how far each client's masked forward point strays from the
//! average dense iterate during local training, and checks every step
//! against the bound built from the measured gradient norm and masking
//! error.
//!
//! cargo run --release --example gradient_drift [local_steps]

use fedmrn::analysis::{box_gradient_bound, gradient_drift, ConvexSetup};
use fedmrn::compressors::CodecId;
use fedmrn::federation::Partition;
use fedmrn::numeric::{ParamVector, QuadraticProblem};

fn main() -> fedmrn::Result<()> {
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let setup = ConvexSetup {
        clients_per_round: 10,
        local_steps: steps,
        rounds: 50,
        ..Default::default()
    };
    let problem = QuadraticProblem::generate(setup.problem)?;
    let partition = Partition::from_shards(problem.shards())?;
    let config = setup.fed_config(CodecId::MrnBinary, box_gradient_bound(&problem));
    let initial = ParamVector::zeros(setup.problem.dim);
    let report = gradient_drift(&problem, &partition, &config, &initial, 20)?;

    println!("S = {steps}, G_hat = {:.4}, q_hat = {:.4}", report.g_hat, report.q_hat);
    println!("{:>6} {:>14} {:>14}", "round", "max drift", "bound");
    for s in report.steps.iter().filter(|s| s.round % 10 == 0) {
        println!("{:>3}.{:<2} {:>14.6e} {:>14.6e}", s.round + 1, s.step, s.drift, s.bound);
    }
    println!("violations: {} of {}", report.violations(), report.steps.len());
    Ok(())
}
