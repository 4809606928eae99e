//! Trains the desk-scale task once per codec and prints accuracy against
//! uplink traffic. Metrics files land in a temporary directory.
//!
//! cargo run --release --example compare_codecs [rounds]

use fedmrn::cli::{parse_config_str, run_compare};

fn main() -> fedmrn::Result<()> {
    let rounds: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let dir = std::env::temp_dir().join("fedmrn_compare_codecs");
    let config = parse_config_str(
        r#"codecs = ["none", "mrn_binary", "mrn_signed", "sign_stochastic", "topk", "terngrad", "drive"]"#,
        &[
            format!("federation.rounds={rounds}"),
            format!("output=\"{}\"", dir.display()),
        ],
    )?;
    let rows = run_compare(&config)?;
    let dense = rows[0].total_uplink_bytes as f64;
    println!(
        "{:>16} {:>9} {:>14} {:>8}",
        "codec", "accuracy", "uplink bytes", "vs dense"
    );
    for r in rows {
        println!(
            "{:>16} {:>9.4} {:>14} {:>7.1}x",
            r.codec,
            r.final_accuracy,
            r.total_uplink_bytes,
            dense / r.total_uplink_bytes as f64
        );
    }
    println!("metrics in {}", dir.display());
    Ok(())
}
