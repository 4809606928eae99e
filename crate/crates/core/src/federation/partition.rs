use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Dataset, Prng};

/// Disjoint client shards of dataset indices with their data weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    shards: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl Partition {
    /// Builds a partition and weights `p_k = |shard_k| / Σ|shard_j|`.
    /// Shards must be nonempty and pairwise disjoint.
    pub fn from_shards(shards: Vec<Vec<usize>>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::invalid("partition needs at least one client"));
        }
        if let Some(k) = shards.iter().position(Vec::is_empty) {
            return Err(Error::invalid(format!("client {k} has an empty shard")));
        }
        let mut all: Vec<usize> = shards.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("shards overlap"));
        }
        let total = all.len() as f64;
        let weights = shards.iter().map(|s| s.len() as f64 / total).collect();
        Ok(Self { shards, weights })
    }

    pub fn n_clients(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, k: usize) -> &[usize] {
        &self.shards[k]
    }

    pub fn shards(&self) -> &[Vec<usize>] {
        &self.shards
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_samples(&self) -> usize {
        self.shards.iter().map(Vec::len).sum()
    }

    /// `p'_k = p_k / Σ_{j ∈ selected} p_j`, in the order of `selected`.
    pub fn selection_weights(&self, selected: &[usize]) -> Vec<f64> {
        let sum: f64 = selected.iter().map(|&k| self.weights[k]).sum();
        selected.iter().map(|&k| self.weights[k] / sum).collect()
    }
}

fn check_clients(n_samples: usize, n_clients: usize) -> Result<()> {
    if n_clients == 0 {
        return Err(Error::config("partition.n_clients", "must be positive"));
    }
    if n_clients > n_samples {
        return Err(Error::config(
            "partition.n_clients",
            format!("{n_clients} clients cannot all receive data from {n_samples} samples"),
        ));
    }
    Ok(())
}

/// Random equal-size shards (sizes differ by at most one).
pub fn partition_iid(dataset: &Dataset, n_clients: usize, seed: u64) -> Result<Partition> {
    check_clients(dataset.len(), n_clients)?;
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    Prng::from_seed(seed, crate::numeric::streams::PARTITION).shuffle(&mut idx);
    let base = idx.len() / n_clients;
    let extra = idx.len() % n_clients;
    let mut shards = Vec::with_capacity(n_clients);
    let mut start = 0;
    for k in 0..n_clients {
        let len = base + usize::from(k < extra);
        shards.push(idx[start..start + len].to_vec());
        start += len;
    }
    Partition::from_shards(shards)
}

const MAX_ATTEMPTS: usize = 10_000;

fn indices_by_label(dataset: &Dataset) -> Vec<Vec<usize>> {
    let mut by_label = vec![Vec::new(); dataset.n_classes()];
    for i in 0..dataset.len() {
        by_label[dataset.label(i)].push(i);
    }
    by_label
}

/// Label-skewed shards: for each label, client proportions are drawn from
/// `Dirichlet(beta·1_N)`. The whole draw is repeated until no shard is
/// empty.
pub fn partition_dirichlet(dataset: &Dataset, n_clients: usize, beta: f64, seed: u64) -> Result<Partition> {
    check_clients(dataset.len(), n_clients)?;
    if !(beta > 0.0) {
        return Err(Error::config("partition.beta", "must be positive"));
    }
    let by_label = indices_by_label(dataset);
    let mut rng = Prng::from_seed(seed, crate::numeric::streams::PARTITION);
    for _ in 0..MAX_ATTEMPTS {
        let mut shards = vec![Vec::new(); n_clients];
        for label_idx in &by_label {
            let mut idx = label_idx.clone();
            rng.shuffle(&mut idx);
            let mut props: Vec<f64> = (0..n_clients).map(|_| rng.gamma(beta)).collect();
            let sum: f64 = props.iter().sum();
            if !(sum > 0.0) {
                props = vec![1.0; n_clients];
            }
            let sum: f64 = props.iter().sum();
            let mut cum = 0.0;
            let mut start = 0;
            for (k, p) in props.iter().enumerate() {
                cum += p / sum;
                let end = if k + 1 == n_clients {
                    idx.len()
                } else {
                    ((cum * idx.len() as f64).round() as usize).clamp(start, idx.len())
                };
                shards[k].extend_from_slice(&idx[start..end]);
                start = end;
            }
        }
        if shards.iter().all(|s| !s.is_empty()) {
            return Partition::from_shards(shards);
        }
    }
    Err(Error::config(
        "partition.beta",
        format!("no Dirichlet draw gave every client data after {MAX_ATTEMPTS} attempts"),
    ))
}

/// Each client holds exactly `labels_per_client` distinct labels; every
/// label's samples are split evenly among the clients holding it. Labels no
/// client picked are left unassigned.
pub fn partition_by_labels(
    dataset: &Dataset,
    n_clients: usize,
    labels_per_client: usize,
    seed: u64,
) -> Result<Partition> {
    check_clients(dataset.len(), n_clients)?;
    let n_classes = dataset.n_classes();
    if labels_per_client == 0 || labels_per_client > n_classes {
        return Err(Error::config(
            "partition.labels_per_client",
            format!("must lie in 1..={n_classes}"),
        ));
    }
    let by_label = indices_by_label(dataset);
    let mut rng = Prng::from_seed(seed, crate::numeric::streams::PARTITION);
    for _ in 0..MAX_ATTEMPTS {
        let mut holders = vec![Vec::new(); n_classes];
        for k in 0..n_clients {
            let mut labels: Vec<usize> = (0..n_classes).collect();
            // partial Fisher-Yates: the first `labels_per_client` are a uniform subset
            for i in 0..labels_per_client {
                let j = i + rng.below(n_classes - i);
                labels.swap(i, j);
            }
            for &c in &labels[..labels_per_client] {
                holders[c].push(k);
            }
        }
        if holders.iter().zip(&by_label).any(|(h, idx)| h.len() > idx.len()) {
            continue;
        }
        let mut shards = vec![Vec::new(); n_clients];
        for (c, h) in holders.iter().enumerate() {
            if h.is_empty() {
                continue;
            }
            let mut idx = by_label[c].clone();
            rng.shuffle(&mut idx);
            let base = idx.len() / h.len();
            let extra = idx.len() % h.len();
            let mut start = 0;
            for (j, &k) in h.iter().enumerate() {
                let len = base + usize::from(j < extra);
                shards[k].extend_from_slice(&idx[start..start + len]);
                start += len;
            }
        }
        return Partition::from_shards(shards);
    }
    Err(Error::config(
        "partition.labels_per_client",
        "labels have too few samples for the clients holding them",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{make_synthetic, SyntheticSpec};

    fn data(n: usize, classes: usize) -> Dataset {
        make_synthetic(&SyntheticSpec {
            n_samples: n,
            n_features: 2,
            n_classes: classes,
            cluster_spread: 1.0,
            seed: 1,
        })
        .unwrap()
    }

    fn assert_disjoint_cover(p: &Partition, n: usize, full: bool) {
        let mut all: Vec<usize> = p.shards().iter().flatten().copied().collect();
        all.sort_unstable();
        let len = all.len();
        all.dedup();
        assert_eq!(all.len(), len, "overlap");
        assert!(all.iter().all(|&i| i < n));
        if full {
            assert_eq!(len, n);
        }
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn iid_equal_shards() {
        let d = data(100, 2);
        let p = partition_iid(&d, 4, 7).unwrap();
        assert!(p.shards().iter().all(|s| s.len() == 25));
        assert_disjoint_cover(&p, 100, true);
        let q = partition_iid(&d, 7, 7).unwrap();
        assert!(q.shards().iter().all(|s| s.len() == 14 || s.len() == 15));
    }

    #[test]
    fn dirichlet_covers() {
        let d = data(1000, 3);
        let p = partition_dirichlet(&d, 20, 0.3, 3).unwrap();
        assert_disjoint_cover(&p, 1000, true);
        assert!(partition_dirichlet(&d, 20, 0.0, 3).is_err());
        assert!(partition_dirichlet(&data(5, 2), 6, 0.3, 3).is_err());
    }

    #[test]
    fn dirichlet_concentrates_at_large_beta() {
        let d = data(3000, 3);
        let p = partition_dirichlet(&d, 5, 1e6, 3).unwrap();
        for s in p.shards() {
            let h = d.label_histogram(s);
            for c in h {
                let frac = c as f64 / s.len() as f64;
                assert!((frac - 1.0 / 3.0).abs() < 0.05, "{frac}");
            }
        }
    }

    #[test]
    fn label_restricted() {
        let d = data(900, 10);
        let p = partition_by_labels(&d, 30, 3, 5).unwrap();
        assert_disjoint_cover(&p, 900, false);
        for s in p.shards() {
            let distinct = d.label_histogram(s).iter().filter(|&&c| c > 0).count();
            assert_eq!(distinct, 3);
        }
        let full = partition_by_labels(&d, 30, 10, 5).unwrap();
        assert_disjoint_cover(&full, 900, true);
        assert!(partition_by_labels(&d, 30, 11, 5).is_err());
    }

    #[test]
    fn selection_weights_normalise() {
        let p = Partition::from_shards(vec![vec![0], vec![1, 2], vec![3, 4, 5]]).unwrap();
        let w = p.selection_weights(&[0, 2]);
        assert_eq!(w, vec![0.25, 0.75]);
        assert!(Partition::from_shards(vec![vec![0], vec![0]]).is_err());
        assert!(Partition::from_shards(vec![vec![0], vec![]]).is_err());
    }
}
