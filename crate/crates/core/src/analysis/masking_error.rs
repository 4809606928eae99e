use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{psm_forward, stochastic_mask, MaskMode, PmSchedule};
use crate::numeric::{derive_seed, streams, NoiseSpec, Prng};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Empirical masking-error ratio: the maximum over `samples` of
/// `mean_trials ‖S(x, G(s)) − x‖ / ‖x‖`, with fresh noise and mask draws per
/// trial. Zero vectors are skipped.
pub fn estimate_q(samples: &[Vec<f64>], noise: &NoiseSpec, mode: MaskMode, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("estimate_q needs at least one trial"));
    }
    let per_sample = samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
            let mut total = 0.0;
            for t in 0..trials {
                let s = derive_seed(seed, &[i as u64, t as u64]);
                let n = noise.generate(s, x.len());
                let m = stochastic_mask(x, &n, mode, &mut Prng::from_seed(s, streams::PROBE))?;
                total += dist(&m.apply(&n)?, x);
            }
            Ok(total / trials as f64 / norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_sample.into_iter().fold(0.0, f64::max))
}

/// `√(Σ_{τ=1..S} τ² / S³)`.
pub fn pm_factor(steps: usize) -> f64 {
    assert!(steps >= 1, "pm_factor: need at least one step");
    let s = steps as f64;
    let sum: f64 = (1..=steps).map(|t| (t * t) as f64).sum();
    (sum / (s * s * s)).sqrt()
}

/// `√((S + 1) / (2S))`: the factor obtained when every coordinate is gated
/// by its own independent `Bernoulli(τ/S)` draw, since then
/// `E‖P ⊙ e‖² = (τ/S) E‖e‖²`.
pub fn pm_factor_iid_gates(steps: usize) -> f64 {
    assert!(steps >= 1, "pm_factor_iid_gates: need at least one step");
    let s = steps as f64;
    ((s + 1.0) / (2.0 * s)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmFactorCheck {
    /// `√(mean_τ E‖S_PM(x) − x‖² / E‖S(x) − x‖²)` from simulation.
    pub empirical: f64,
    /// [`pm_factor`].
    pub analytic: f64,
    /// [`pm_factor_iid_gates`].
    pub analytic_iid_gates: f64,
    /// `√(E‖S(x) − x‖²) / ‖x‖` for the probe vector.
    pub q_base: f64,
}

impl PmFactorCheck {
    pub fn relative_error(&self) -> f64 {
        (self.empirical - self.analytic).abs() / self.analytic
    }
}

/// Simulates the gated masking error of [`psm_forward`] at every step
/// `τ = 1..S` against plain stochastic masking.
///
/// Each trial draws fresh noise and a probe `x` strictly inside the
/// reachable interval, so clipping never acts.
pub fn verify_pm_factor(
    dim: usize,
    steps: usize,
    noise: &NoiseSpec,
    mode: MaskMode,
    trials: usize,
    seed: u64,
) -> Result<PmFactorCheck> {
    if dim == 0 || steps == 0 || trials == 0 {
        return Err(Error::invalid("verify_pm_factor needs positive dim, steps and trials"));
    }
    let sums = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, &[t as u64]);
            let n = noise.generate(s, dim);
            let mut rng = Prng::from_seed(s, streams::PROBE);
            let x: Vec<f64> = n
                .iter()
                .map(|&ni| match mode {
                    MaskMode::Binary => rng.uniform_nonzero(0.0, 1.0) * ni,
                    MaskMode::Signed => rng.uniform_nonzero(-1.0, 1.0) * ni,
                })
                .collect();
            let base = dist(&stochastic_mask(&x, &n, mode, &mut rng)?.apply(&n)?, &x).powi(2);
            let mut gated = 0.0;
            for tau in 1..=steps {
                let out = psm_forward(&x, &n, mode, PmSchedule::new(steps, tau)?, &mut rng)?;
                gated += dist(&out.masked, &x).powi(2);
            }
            let norm_sq: f64 = x.iter().map(|v| v * v).sum();
            Ok((base, gated / steps as f64, norm_sq))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut base, mut gated, mut norm_sq) = (0.0, 0.0, 0.0);
    for (b, g, n) in sums {
        base += b;
        gated += g;
        norm_sq += n;
    }
    Ok(PmFactorCheck {
        empirical: (gated / base).sqrt(),
        analytic: pm_factor(steps),
        analytic_iid_gates: pm_factor_iid_gates(steps),
        q_base: (base / norm_sq).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pm_factor_values() {
        assert_eq!(pm_factor(1), 1.0);
        assert!((pm_factor(10) - (385.0f64 / 1000.0).sqrt()).abs() < 1e-12);
        assert!((pm_factor(10_000) - (1.0f64 / 3.0).sqrt()).abs() < 1e-4);
        let mut prev = pm_factor(1);
        for s in 2..200 {
            let f = pm_factor(s);
            assert!(f < prev && f > (1.0f64 / 3.0).sqrt());
            prev = f;
        }
        assert_eq!(pm_factor_iid_gates(1), 1.0);
    }

    #[test]
    fn q_is_zero_on_fixed_points() {
        // with two-point noise, ±m is reproduced exactly by a signed mask
        let noise = NoiseSpec::two_point(0.5);
        let x = vec![vec![0.5, -0.5, 0.5, 0.5, -0.5]];
        assert_eq!(estimate_q(&x, &noise, MaskMode::Signed, 50, 1).unwrap(), 0.0);
        let zero = vec![vec![0.0; 8]];
        assert_eq!(estimate_q(&zero, &noise, MaskMode::Binary, 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn q_half_noise_binary_is_one() {
        // |error| = n/2 in every coordinate whichever sign the noise takes
        let x = vec![vec![0.5; 32]];
        let q = estimate_q(&x, &NoiseSpec::two_point(1.0), MaskMode::Binary, 200, 3).unwrap();
        assert!((q - 1.0).abs() < 1e-12, "{q}");
    }

    #[test]
    fn q_shrinks_as_noise_approaches_update() {
        let x = vec![vec![0.01; 64]];
        let q = |m| estimate_q(&x, &NoiseSpec::two_point(m), MaskMode::Signed, 200, 5).unwrap();
        assert!(q(0.011) < q(0.05));
        assert!(q(0.05) < q(0.5));
    }

    #[test]
    fn pm_check_tracks_iid_gate_factor() {
        let c = verify_pm_factor(32, 4, &NoiseSpec::uniform(0.01), MaskMode::Signed, 2000, 9).unwrap();
        assert!(
            (c.empirical - c.analytic_iid_gates).abs() / c.analytic_iid_gates < 0.03,
            "{c:?}"
        );
        assert!(c.q_base > 0.0);
    }
}
