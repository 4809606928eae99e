use std::fs;
use std::path::Path;
use std::process::Command;

use fedmrn::analysis::AnalysisReport;
use fedmrn::cli::{parse_config_str, read_metrics, run_compare, METRICS_HEADER};

const SMALL: &str = r#"
codecs = ["fedavg", "fedmrn", "fedmrns", "topk"]

[dataset]
n_samples = 600

[federation]
n_clients = 10
clients_per_round = 3
rounds = 6
local_epochs = 2

[probe]
trials = 200
q_trials = 5
slope_rounds = 60
drift_rounds = 3
"#;

fn fedmrn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fedmrn")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let ok = fedmrn(&["train", "-c", &cfg, "-o", out]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(Path::new(out).join("metrics_none.csv").is_file());

    let k_gt_n = fedmrn(&["train", "-c", &cfg, "--set", "federation.clients_per_round=11"]);
    assert_eq!(k_gt_n.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&k_gt_n.stderr).contains("federation.clients_per_round"));

    let unknown = fedmrn(&["compare", "-c", &cfg, "--set", "federation.speed=3"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("federation.speed"));

    let missing = fedmrn(&["train", "-c", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "a,b,label\n1.0,2.0,0\n1.0,oops,1\n").unwrap();
    let runtime = fedmrn(&[
        "train",
        "-c",
        &cfg,
        "-o",
        out,
        "--set",
        "dataset.source=csv",
        "--set",
        &format!("dataset.path=\"{}\"", csv.display()),
    ]);
    assert_eq!(runtime.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&runtime.stderr).contains(":3:"));
}

#[test]
fn compare_is_byte_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = fedmrn(&["compare", "-c", &cfg, "-o", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    for file in [
        "metrics_none.csv",
        "metrics_mrn_binary.csv",
        "metrics_mrn_signed.csv",
        "metrics_topk.csv",
        "summary.csv",
    ] {
        let x = fs::read(a.join(file)).unwrap();
        assert_eq!(x, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(x, fs::read(c.join(file)).unwrap(), "{file}");
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
}

#[test]
fn metrics_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let config = parse_config_str(SMALL, &[format!("output=\"{}\"", out.display())]).unwrap();
    let rows = run_compare(&config).unwrap();
    assert_eq!(rows.len(), 4);
    let text = fs::read_to_string(out.join("metrics_mrn_binary.csv")).unwrap();
    assert!(text.starts_with(METRICS_HEADER));
    let metrics = read_metrics(text.as_bytes()).unwrap();
    assert_eq!(metrics.len(), 6);
    assert!(metrics.windows(2).all(|w| w[1].round == w[0].round + 1));
    assert!(metrics.iter().all(|m| (0.0..=1.0).contains(&m.eval_accuracy)));
}

#[test]
fn probe_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("p");
    let o = fedmrn(&["probe", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = AnalysisReport::from_json(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    report.validate().unwrap();
    assert!(report.q_hat.unwrap() >= 0.0);
    assert!(report.pm_factor_hat.is_some() && report.slope_hat.is_some());
    assert_eq!(report.drift_per_round.len(), 3);
}

#[test]
fn partition_inspect_lists_every_client() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = fedmrn(&["partition-inspect", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("client,samples,weight,label_0"));
    let total: usize = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 480);
}
