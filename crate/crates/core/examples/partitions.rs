//! Label skew of the three partition schemes on a synthetic dataset: the
//! mean fraction of each client's data taken by its most common label.
//!
//! cargo run --release --example partitions

use fedmrn::federation::{partition_by_labels, partition_dirichlet, partition_iid, Partition};
use fedmrn::numeric::{make_synthetic, Dataset, SyntheticSpec};

fn dominance(data: &Dataset, p: &Partition) -> f64 {
    let per_client = p.shards().iter().map(|shard| {
        let mut counts = vec![0usize; data.n_classes()];
        shard.iter().for_each(|&i| counts[data.label(i)] += 1);
        *counts.iter().max().unwrap() as f64 / shard.len().max(1) as f64
    });
    per_client.sum::<f64>() / p.n_clients() as f64
}

fn main() -> fedmrn::Result<()> {
    let data = make_synthetic(&SyntheticSpec {
        n_samples: 5000,
        n_features: 20,
        n_classes: 10,
        cluster_spread: 1.0,
        seed: 0,
    })?;
    let n = 100;
    let mut rows = vec![("iid".to_string(), partition_iid(&data, n, 0)?)];
    for beta in [0.1, 0.3, 1.0, 10.0] {
        rows.push((format!("dirichlet {beta}"), partition_dirichlet(&data, n, beta, 0)?));
    }
    for labels in [1, 2, 5] {
        rows.push((format!("{labels} labels"), partition_by_labels(&data, n, labels, 0)?));
    }
    println!(
        "{:>14} {:>10} {:>9} {:>9}",
        "scheme", "dominance", "min size", "max size"
    );
    for (name, p) in rows {
        let sizes = p.shards().iter().map(Vec::len);
        let (lo, hi) = sizes.fold((usize::MAX, 0), |(lo, hi), s| (lo.min(s), hi.max(s)));
        println!("{name:>14} {:>10.3} {lo:>9} {hi:>9}", dominance(&data, &p));
    }
    Ok(())
}
