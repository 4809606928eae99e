//! Mapping dense model updates onto masked random noise.
//!
//! For an update coordinate `u` and its noise value `n`:
//!
//! - **Stochastic masking** draws the mask bit from a Bernoulli whose
//!   probability makes `E[n·m] = u` whenever `u` lies in the reachable
//!   interval (`u/n ∈ [0, 1]` for binary masks, `u/n ∈ [-1, 1]` for signed).
//! - **Deterministic masking** keeps a coordinate iff `u` and `n` agree in
//!   sign. It is biased and only kept as a diagnostic baseline.
//! - **Progressive masking** gates each coordinate with probability `τ/S`
//!   at local step `τ`: gated coordinates see masked noise, the rest see the
//!   update clipped to the reachable interval.
//!
//! Training goes straight through the mask: the gradient taken at the
//! masked point is applied to `u` unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::numeric::{ParamVector, Prng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Mask values in `{0, 1}`.
    Binary,
    /// Mask values in `{-1, +1}`.
    Signed,
}

/// One mask bit per parameter. A set bit means `1` (binary) or `+1`
/// (signed); a cleared bit means `0` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVector {
    bits: Vec<bool>,
    mode: MaskMode,
}

impl MaskVector {
    pub fn new(bits: Vec<bool>, mode: MaskMode) -> Self {
        Self { bits, mode }
    }

    pub fn zeros(dim: usize, mode: MaskMode) -> Self {
        Self::new(vec![false; dim], mode)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Numeric mask value of coordinate `i`.
    pub fn value(&self, i: usize) -> f64 {
        match (self.mode, self.bits[i]) {
            (MaskMode::Binary, true) => 1.0,
            (MaskMode::Binary, false) => 0.0,
            (MaskMode::Signed, true) => 1.0,
            (MaskMode::Signed, false) => -1.0,
        }
    }

    /// `noise ⊙ mask`.
    pub fn apply(&self, noise: &[f64]) -> Result<ParamVector> {
        ensure_same_len(self.len(), noise.len())?;
        Ok(noise
            .iter()
            .zip(&self.bits)
            .map(|(&n, &b)| match (self.mode, b) {
                (_, true) => n,
                (MaskMode::Binary, false) => 0.0,
                (MaskMode::Signed, false) => -n,
            })
            .collect())
    }
}

/// Linear progressive-masking schedule: gate probability `τ/S` at step `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PmSchedule {
    total_steps: usize,
    current_step: usize,
}

impl PmSchedule {
    pub fn new(total_steps: usize, current_step: usize) -> Result<Self> {
        if total_steps == 0 || current_step == 0 || current_step > total_steps {
            return Err(Error::invalid(format!(
                "schedule step {current_step} outside 1..={total_steps}"
            )));
        }
        Ok(Self {
            total_steps,
            current_step,
        })
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn current_step(&self) -> usize {
        self.current_step
    }

    pub fn probability(&self) -> f64 {
        self.current_step as f64 / self.total_steps as f64
    }
}

/// Probability that the mask bit is set.
///
/// Binary: `clip(u/n, 0, 1)`. Signed: `clip((u+n)/(2n), 0, 1)`.
///
/// # Panics
///
/// If `n == 0`. Noise generators never emit zero.
pub fn mask_probability(u: f64, n: f64, mode: MaskMode) -> f64 {
    assert!(n != 0.0, "mask_probability: noise value must be nonzero");
    let p = match mode {
        MaskMode::Binary => u / n,
        MaskMode::Signed => (u + n) / (2.0 * n),
    };
    p.clamp(0.0, 1.0)
}

fn check_noise(u: &[f64], noise: &[f64]) -> Result<()> {
    ensure_same_len(u.len(), noise.len())?;
    if noise.contains(&0.0) {
        return Err(Error::invalid("noise contains an exact zero"));
    }
    Ok(())
}

/// Bernoulli mask draw, one PRNG draw per coordinate in index order.
pub fn stochastic_mask(u: &[f64], noise: &[f64], mode: MaskMode, rng: &mut Prng) -> Result<MaskVector> {
    check_noise(u, noise)?;
    let bits = u
        .iter()
        .zip(noise)
        .map(|(&ui, &ni)| rng.bernoulli(mask_probability(ui, ni, mode)))
        .collect();
    Ok(MaskVector::new(bits, mode))
}

/// Sign-agreement mask.
///
/// Binary: set iff `u ≠ 0` and `sign(u) = sign(n)`. Signed: `sign(u·n)`,
/// with `u = 0` mapped to `+1`.
pub fn deterministic_mask(u: &[f64], noise: &[f64], mode: MaskMode) -> Result<MaskVector> {
    check_noise(u, noise)?;
    let bits = u
        .iter()
        .zip(noise)
        .map(|(&ui, &ni)| match mode {
            MaskMode::Binary => ui != 0.0 && (ui > 0.0) == (ni > 0.0),
            MaskMode::Signed => ui * ni >= 0.0,
        })
        .collect();
    Ok(MaskVector::new(bits, mode))
}

/// Clamps each update coordinate to the interval reachable by masked noise:
/// `[min(0, n), max(0, n)]` for binary masks, `[-|n|, |n|]` for signed.
pub fn clip_to_noise(u: &[f64], noise: &[f64], mode: MaskMode) -> Result<ParamVector> {
    ensure_same_len(u.len(), noise.len())?;
    Ok(u.iter()
        .zip(noise)
        .map(|(&ui, &ni)| match mode {
            MaskMode::Binary => ui.clamp(ni.min(0.0), ni.max(0.0)),
            MaskMode::Signed => ui.clamp(-ni.abs(), ni.abs()),
        })
        .collect())
}

/// Result of one progressive stochastic masking forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PsmOutput {
    /// The update the forward pass sees.
    pub masked: ParamVector,
    /// The stochastic mask drawn this step (for every coordinate, gated or
    /// not).
    pub mask: MaskVector,
    /// `true` where the coordinate was replaced by masked noise.
    pub gate: Vec<bool>,
}

/// `û = (1 − P) ⊙ clip(u) + P ⊙ noise ⊙ M(u, noise)` with
/// `P ~ Bernoulli(τ/S)` per coordinate.
///
/// Consumes `d` draws for the mask, then `d` draws for the gate. At `τ = S`
/// the gate is all ones and `masked` equals the stochastic mask output for
/// the same stream position.
pub fn psm_forward(
    u: &[f64],
    noise: &[f64],
    mode: MaskMode,
    schedule: PmSchedule,
    rng: &mut Prng,
) -> Result<PsmOutput> {
    let mask = stochastic_mask(u, noise, mode, rng)?;
    let p = schedule.probability();
    let gate: Vec<bool> = (0..u.len()).map(|_| rng.bernoulli(p)).collect();
    let masked_noise = mask.apply(noise)?;
    let clipped = clip_to_noise(u, noise, mode)?;
    let masked = gate
        .iter()
        .zip(masked_noise.iter().zip(clipped.iter()))
        .map(|(&g, (&m, &c))| if g { m } else { c })
        .collect();
    Ok(PsmOutput { masked, mask, gate })
}

/// Straight-through update `u − lr · grad`, where `grad` was taken at the
/// masked point.
pub fn ste_step(u: &[f64], grad_at_masked: &[f64], lr: f64) -> Result<ParamVector> {
    ensure_same_len(u.len(), grad_at_masked.len())?;
    if !(lr >= 0.0) {
        return Err(Error::invalid("learning rate must be non-negative"));
    }
    Ok(u.iter().zip(grad_at_masked).map(|(a, g)| a - lr * g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rng_uniform, streams, RngState};

    fn rng(seed: u64) -> Prng {
        Prng::from_seed(seed, streams::MASK)
    }

    #[test]
    fn probabilities() {
        assert_eq!(mask_probability(0.005, 0.01, MaskMode::Binary), 0.5);
        assert_eq!(mask_probability(-0.003, 0.01, MaskMode::Binary), 0.0);
        assert_eq!(mask_probability(0.0, 0.01, MaskMode::Signed), 0.5);
        assert_eq!(mask_probability(0.005, 0.005, MaskMode::Signed), 1.0);
        // negative noise: formula applied verbatim
        assert_eq!(mask_probability(-0.005, -0.01, MaskMode::Binary), 0.5);
        assert_eq!(mask_probability(0.005, -0.01, MaskMode::Signed), 0.25);
    }

    #[test]
    #[should_panic]
    fn zero_noise_is_a_contract_violation() {
        mask_probability(0.1, 0.0, MaskMode::Binary);
    }

    #[test]
    fn signed_zero_update_has_zero_mean() {
        let p = mask_probability(0.0, 0.01, MaskMode::Signed);
        assert_eq!(p * 0.01 + (1.0 - p) * -0.01, 0.0);
    }

    #[test]
    fn saturated_and_empty_masks() {
        let noise = rng_uniform(RngState::new(1, 0), 64, -0.01, 0.01);
        let all = stochastic_mask(&noise, &noise, MaskMode::Binary, &mut rng(1)).unwrap();
        assert!(all.bits().iter().all(|&b| b));
        let none = stochastic_mask(&vec![0.0; 64], &noise, MaskMode::Binary, &mut rng(1)).unwrap();
        assert!(none.bits().iter().all(|&b| !b));
        assert_eq!(none.apply(&noise).unwrap(), ParamVector::zeros(64));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(stochastic_mask(&[0.0], &[0.1, 0.1], MaskMode::Binary, &mut rng(0)).is_err());
        assert!(deterministic_mask(&[0.0], &[0.1, 0.1], MaskMode::Binary).is_err());
        assert!(clip_to_noise(&[0.0], &[0.1, 0.1], MaskMode::Binary).is_err());
        assert!(stochastic_mask(&[0.0], &[0.0], MaskMode::Binary, &mut rng(0)).is_err());
    }

    #[test]
    fn deterministic_mask_cases() {
        let m = deterministic_mask(&[0.003, -0.003, 0.0], &[0.01, 0.01, 0.01], MaskMode::Binary).unwrap();
        assert_eq!(m.bits(), &[true, false, false]);
        assert_eq!(m.apply(&[0.01, 0.01, 0.01]).unwrap()[0], 0.01);
        let s = deterministic_mask(&[0.003, -0.003, 0.0], &[0.01, 0.01, -0.01], MaskMode::Signed).unwrap();
        assert_eq!(s.bits(), &[true, false, true]);
    }

    #[test]
    fn clipping() {
        let b = clip_to_noise(&[0.02, 0.005], &[0.01, -0.01], MaskMode::Binary).unwrap();
        assert_eq!(b.as_slice(), &[0.01, 0.0]);
        let s = clip_to_noise(&[-0.02, 0.003], &[0.01, -0.01], MaskMode::Signed).unwrap();
        assert_eq!(s.as_slice(), &[-0.01, 0.003]);
    }

    #[test]
    fn schedule_bounds() {
        assert!(PmSchedule::new(5, 0).is_err());
        assert!(PmSchedule::new(5, 6).is_err());
        assert!(PmSchedule::new(0, 0).is_err());
        assert_eq!(PmSchedule::new(4, 4).unwrap().probability(), 1.0);
        assert_eq!(PmSchedule::new(4, 1).unwrap().probability(), 0.25);
    }

    #[test]
    fn psm_at_final_step_is_pure_masking() {
        let noise = rng_uniform(RngState::new(2, 0), 257, -0.01, 0.01);
        let u = rng_uniform(RngState::new(3, 0), 257, -0.01, 0.01);
        let s = PmSchedule::new(7, 7).unwrap();
        let out = psm_forward(&u, &noise, MaskMode::Signed, s, &mut rng(4)).unwrap();
        assert!(out.gate.iter().all(|&g| g));
        let direct = stochastic_mask(&u, &noise, MaskMode::Signed, &mut rng(4)).unwrap();
        assert_eq!(out.mask, direct);
        assert_eq!(out.masked, direct.apply(&noise).unwrap());
    }

    #[test]
    fn ste() {
        assert_eq!(ste_step(&[0.0], &[1.0], 0.1).unwrap().as_slice(), &[-0.1]);
        assert_eq!(ste_step(&[0.3, 0.2], &[0.0, 0.0], 0.1).unwrap().as_slice(), &[0.3, 0.2]);
        let mut u = ParamVector::from(vec![1.0]);
        for _ in 0..10 {
            u = ste_step(&u, &[0.5], 0.1).unwrap();
        }
        assert!((u[0] - (1.0 - 10.0 * 0.1 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn signed_binary_identity() {
        let noise = rng_uniform(RngState::new(5, 0), 100, -1.0, 1.0);
        let u = rng_uniform(RngState::new(6, 0), 100, -1.0, 1.0);
        let b = stochastic_mask(&u, &noise, MaskMode::Binary, &mut rng(7)).unwrap();
        let s = MaskVector::new(b.bits().to_vec(), MaskMode::Signed);
        let gb = b.apply(&noise).unwrap();
        let gs = s.apply(&noise).unwrap();
        for i in 0..100 {
            assert_eq!(gs[i], 2.0 * gb[i] - noise[i]);
        }
    }
}
