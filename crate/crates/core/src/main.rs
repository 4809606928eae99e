use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedmrn::cli::{
    exit_code, parse_config, parse_config_str, partition_inspect, run_compare, run_probe, run_train, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "fedmrn",
    version,
    about = "Federated learning with masked random noise updates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run config. Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set federation.rounds=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set output=DIR`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Shorthand for `--set seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for `--set threads=N`.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the first listed codec and write its metrics.
    Train(Common),
    /// Train every listed codec under shared seeds and write a summary.
    Compare(Common),
    /// Run the analysis probes and write analysis.json.
    Probe(Common),
    /// Print per-client shard sizes and label counts.
    PartitionInspect(Common),
}

fn load(common: &Common) -> fedmrn::Result<RunConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(o) = &common.output {
        overrides.push(format!("output=\"{}\"", o.display()));
    }
    if let Some(s) = common.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(t) = common.threads {
        overrides.push(format!("threads={t}"));
    }
    match &common.config {
        Some(path) => parse_config(path, &overrides),
        None => parse_config_str("", &overrides),
    }
}

fn run(cli: Cli) -> fedmrn::Result<()> {
    match cli.command {
        Command::Train(c) => {
            let config = load(&c)?;
            let run = run_train(&config)?;
            if let Some(m) = run.metrics.last() {
                println!(
                    "{}: round {} accuracy {:.4} loss {:.4}",
                    m.codec, m.round, m.eval_accuracy, m.eval_loss
                );
            }
        }
        Command::Compare(c) => {
            let config = load(&c)?;
            println!("{:<16} {:>8} {:>10} {:>16}", "codec", "lr", "accuracy", "uplink bytes");
            for row in run_compare(&config)? {
                println!(
                    "{:<16} {:>8} {:>10.4} {:>16}",
                    row.codec, row.lr, row.final_accuracy, row.total_uplink_bytes
                );
            }
        }
        Command::Probe(c) => {
            let config = load(&c)?;
            let report = run_probe(&config)?;
            println!("{}", report.to_json()?);
        }
        Command::PartitionInspect(c) => {
            let config = load(&c)?;
            print!("{}", partition_inspect(&config)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
