//! Counter-based pseudo-random streams.
//!
//! Every random quantity in the simulator is drawn from a ChaCha8 keystream
//! keyed by a 64-bit seed and selected by a 64-bit stream id. The keystream
//! is a pure function of `(seed, stream_id, position)`, so a client and the
//! server that regenerate noise from the same seed get bit-identical values
//! on every platform. Float conversion and the distribution samplers are
//! written out here so they cannot drift with an upstream crate's defaults.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ParamVector;

/// Domain-separation tags for stream ids and seed derivation.
pub mod streams {
    pub const NOISE: u64 = 0x6e_6f69_7365;
    pub const MASK: u64 = 0x6d61_736b;
    pub const BATCH: u64 = 0x62_6174_6368;
    pub const CODEC: u64 = 0x63_6f64_6563;
    pub const PARTITION: u64 = 0x7061_7274;
    pub const SAMPLING: u64 = 0x7361_6d70;
    pub const DATA: u64 = 0x6461_7461;
    pub const INIT: u64 = 0x696e_6974;
    pub const PROBE: u64 = 0x70_726f_6265;
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Seed plus stream id. Identical states always produce identical streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngState {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn stream(self) -> Prng {
        Prng::new(self)
    }
}

/// A running stream positioned at some offset of the keystream for an
/// [`RngState`].
#[derive(Debug, Clone)]
pub struct Prng {
    inner: ChaCha8Rng,
}

impl Prng {
    pub fn new(state: RngState) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&state.seed.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(state.stream_id);
        Self { inner }
    }

    pub fn from_seed(seed: u64, stream_id: u64) -> Self {
        Self::new(RngState::new(seed, stream_id))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// One draw, `true` with probability `p`. `p <= 0` never fires and
    /// `p >= 1` always fires.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        // Lemire's multiply-shift with rejection of the biased low zone.
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Uniform on `(lo, hi)`, never exactly zero.
    pub fn uniform_nonzero(&mut self, lo: f64, hi: f64) -> f64 {
        loop {
            let v = lo + (hi - lo) * self.open01();
            if v != 0.0 && v > lo && v < hi {
                return v;
            }
        }
    }

    /// `N(0, sigma^2)`, never exactly zero.
    pub fn gaussian(&mut self, sigma: f64) -> f64 {
        loop {
            let z: f64 = StandardNormal.sample(self);
            if z != 0.0 {
                return sigma * z;
            }
        }
    }

    pub fn two_point(&mut self, magnitude: f64) -> f64 {
        if self.next_u64() >> 63 == 1 {
            magnitude
        } else {
            -magnitude
        }
    }

    /// `Gamma(shape, 1)`; used to build Dirichlet draws.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        Gamma::new(shape, 1.0)
            .expect("gamma shape must be positive")
            .sample(self)
    }
}

impl RngCore for Prng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a master seed and a list of tags into a child seed.
///
/// Order matters: `derive_seed(s, &[a, b]) != derive_seed(s, &[b, a])` in
/// general.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(master), |h, &t| {
        splitmix64(h ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019)))
    })
}

/// `count` draws uniform on `(lo, hi)`; exact zeros are resampled.
pub fn rng_uniform(state: RngState, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo < hi, "rng_uniform requires lo < hi");
    let mut rng = state.stream();
    (0..count).map(|_| rng.uniform_nonzero(lo, hi)).collect()
}

/// `count` draws from `N(0, sigma^2)`. Panics unless `sigma > 0`.
pub fn rng_gaussian(state: RngState, count: usize, sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "rng_gaussian requires sigma > 0");
    let mut rng = state.stream();
    (0..count).map(|_| rng.gaussian(sigma)).collect()
}

/// `count` draws of `±magnitude` with equal probability.
pub fn rng_two_point(state: RngState, count: usize, magnitude: f64) -> Vec<f64> {
    assert!(magnitude > 0.0, "rng_two_point requires magnitude > 0");
    let mut rng = state.stream();
    (0..count).map(|_| rng.two_point(magnitude)).collect()
}

/// Distribution family of the shared noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    /// Uniform on `[-magnitude, magnitude]`.
    Uniform,
    /// `N(0, magnitude^2)`.
    Gaussian,
    /// `±magnitude` with equal probability.
    TwoPoint,
}

impl std::str::FromStr for NoiseDist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(NoiseDist::Uniform),
            "gaussian" => Ok(NoiseDist::Gaussian),
            "two_point" | "bernoulli" => Ok(NoiseDist::TwoPoint),
            other => Err(format!("unknown noise distribution `{other}`")),
        }
    }
}

/// Noise family and scale. Together with a seed this fully determines the
/// noise vector `G(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub dist: NoiseDist,
    pub magnitude: f64,
}

impl NoiseSpec {
    pub fn new(dist: NoiseDist, magnitude: f64) -> Self {
        Self { dist, magnitude }
    }

    pub fn uniform(magnitude: f64) -> Self {
        Self::new(NoiseDist::Uniform, magnitude)
    }

    pub fn two_point(magnitude: f64) -> Self {
        Self::new(NoiseDist::TwoPoint, magnitude)
    }

    /// Regenerates the noise for `seed`. Every entry is nonzero.
    pub fn generate(&self, seed: u64, dim: usize) -> ParamVector {
        let state = RngState::new(seed, streams::NOISE);
        let m = self.magnitude;
        match self.dist {
            NoiseDist::Uniform => rng_uniform(state, dim, -m, m),
            NoiseDist::Gaussian => rng_gaussian(state, dim, m),
            NoiseDist::TwoPoint => rng_two_point(state, dim, m),
        }
        .into()
    }
}
