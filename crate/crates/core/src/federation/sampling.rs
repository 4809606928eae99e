use crate::error::{Error, Result};
use crate::numeric::{derive_seed, streams, Prng};

/// `k` of `n` clients uniformly without replacement, sorted ascending.
/// Deterministic in `(seed, round)`.
pub fn sample_clients(n: usize, k: usize, round: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot select {k} of {n} clients")));
    }
    let mut rng = Prng::from_seed(derive_seed(seed, &[round as u64]), streams::SAMPLING);
    let mut ids: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        ids.swap(i, j);
    }
    let mut chosen = ids[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}
