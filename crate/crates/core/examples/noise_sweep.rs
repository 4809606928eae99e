//! Accuracy of FedMRN as the noise magnitude varies, for both mask modes.
//! Too little noise cannot express the update; too much drowns it.
//!
//! cargo run --release --example noise_sweep [rounds]

use fedmrn::cli::{parse_config_str, run_compare};

fn main() -> fedmrn::Result<()> {
    let rounds: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let dir = std::env::temp_dir().join("fedmrn_noise_sweep");
    let magnitudes = [6.25e-4, 1.25e-3, 2.5e-3, 5e-3, 1e-2, 2e-2];
    println!("{:>10} {:>10} {:>10}", "magnitude", "binary", "signed");
    for m in magnitudes {
        let config = parse_config_str(
            r#"codecs = ["mrn_binary", "mrn_signed"]"#,
            &[
                format!("federation.rounds={rounds}"),
                "federation.lr=0.01".into(),
                format!("noise.magnitude={m}"),
                format!("output=\"{}\"", dir.display()),
            ],
        )?;
        let rows = run_compare(&config)?;
        println!(
            "{m:>10} {:>10.4} {:>10.4}",
            rows[0].final_accuracy, rows[1].final_accuracy
        );
    }
    Ok(())
}
