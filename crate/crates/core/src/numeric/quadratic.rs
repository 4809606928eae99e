use serde::{Deserialize, Serialize};

use super::objective::{Evaluation, Evaluator, Objective};
use super::param::ParamVector;
use super::rng::{streams, Prng};
use crate::error::{Error, Result};

/// Parameters of the strongly convex federated testbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub n_clients: usize,
    pub samples_per_client: usize,
    pub dim: usize,
    /// Lower bound on every per-sample curvature.
    pub mu: f64,
    /// Upper bound on every per-sample curvature.
    pub smoothness: f64,
    /// Scale of the per-client centre offsets (data heterogeneity).
    pub heterogeneity: f64,
    /// Per-sample jitter around the client centre (gradient noise).
    pub sample_spread: f64,
    pub seed: u64,
}

impl Default for QuadraticSpec {
    fn default() -> Self {
        Self {
            n_clients: 10,
            samples_per_client: 20,
            dim: 50,
            mu: 1.0,
            smoothness: 2.0,
            heterogeneity: 1.0,
            sample_spread: 1.0,
            seed: 0,
        }
    }
}

/// Sum of diagonal quadratics, one per sample:
/// `f_i(w) = ½ Σ_j a_ij (w_j − c_ij)²`.
///
/// Samples `k·m .. (k+1)·m` belong to client `k`. Every client objective is
/// `mu`-strongly convex and `smoothness`-smooth, and the global minimiser is
/// available in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    spec: QuadraticSpec,
    curvature: Vec<f64>,
    centres: Vec<f64>,
}

impl QuadraticProblem {
    pub fn generate(spec: QuadraticSpec) -> Result<Self> {
        if spec.n_clients == 0 || spec.samples_per_client == 0 || spec.dim == 0 {
            return Err(Error::invalid("quadratic testbed sizes must be positive"));
        }
        if !(spec.mu > 0.0 && spec.smoothness >= spec.mu) {
            return Err(Error::invalid("need 0 < mu <= smoothness"));
        }
        let mut rng = Prng::from_seed(spec.seed, streams::DATA);
        let d = spec.dim;
        let n = spec.n_clients * spec.samples_per_client;
        let mut curvature = Vec::with_capacity(n * d);
        let mut centres = Vec::with_capacity(n * d);
        for _ in 0..spec.n_clients {
            let offset: Vec<f64> = (0..d)
                .map(|_| {
                    if spec.heterogeneity > 0.0 {
                        rng.gaussian(spec.heterogeneity)
                    } else {
                        0.0
                    }
                })
                .collect();
            for _ in 0..spec.samples_per_client {
                for &o in &offset {
                    let a = if spec.smoothness > spec.mu {
                        rng.uniform_nonzero(spec.mu, spec.smoothness)
                    } else {
                        spec.mu
                    };
                    curvature.push(a);
                    let jitter = if spec.sample_spread > 0.0 {
                        rng.gaussian(spec.sample_spread)
                    } else {
                        0.0
                    };
                    centres.push(o + jitter);
                }
            }
        }
        Ok(Self {
            spec,
            curvature,
            centres,
        })
    }

    pub fn spec(&self) -> &QuadraticSpec {
        &self.spec
    }

    pub fn n_samples(&self) -> usize {
        self.spec.n_clients * self.spec.samples_per_client
    }

    /// Per-sample centres, row-major `n_samples × dim`.
    pub fn centres(&self) -> &[f64] {
        &self.centres
    }

    /// Sample indices owned by each client.
    pub fn shards(&self) -> Vec<Vec<usize>> {
        let m = self.spec.samples_per_client;
        (0..self.spec.n_clients)
            .map(|k| (k * m..(k + 1) * m).collect())
            .collect()
    }

    fn sample(&self, i: usize) -> (&[f64], &[f64]) {
        let d = self.spec.dim;
        (&self.curvature[i * d..(i + 1) * d], &self.centres[i * d..(i + 1) * d])
    }

    /// Global objective `F(w)`: mean over all samples.
    pub fn objective(&self, w: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.n_samples()).collect();
        self.loss_grad(w, &all).0
    }

    /// Closed-form minimiser of `F`.
    pub fn minimizer(&self) -> ParamVector {
        let d = self.spec.dim;
        let mut num = vec![0.0; d];
        let mut den = vec![0.0; d];
        for i in 0..self.n_samples() {
            let (a, c) = self.sample(i);
            for j in 0..d {
                num[j] += a[j] * c[j];
                den[j] += a[j];
            }
        }
        num.iter().zip(&den).map(|(n, d)| n / d).collect()
    }

    pub fn optimum(&self) -> f64 {
        self.objective(&self.minimizer())
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn loss_grad(&self, at: &[f64], batch: &[usize]) -> (f64, ParamVector) {
        assert_eq!(at.len(), self.spec.dim, "quadratic: dimension mismatch");
        assert!(!batch.is_empty(), "quadratic: empty batch");
        let mut grad = ParamVector::zeros(self.spec.dim);
        let mut loss = 0.0;
        for &i in batch {
            let (a, c) = self.sample(i);
            for j in 0..self.spec.dim {
                let r = at[j] - c[j];
                loss += 0.5 * a[j] * r * r;
                grad[j] += a[j] * r;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        (loss * inv, grad)
    }
}

impl Evaluator for QuadraticProblem {
    fn evaluate(&self, params: &[f64]) -> Evaluation {
        Evaluation {
            loss: self.objective(params),
            accuracy: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gradcheck::{central_difference, max_relative_error};

    #[test]
    fn minimizer_is_stationary() {
        let p = QuadraticProblem::generate(QuadraticSpec {
            dim: 5,
            ..Default::default()
        })
        .unwrap();
        let w = p.minimizer();
        let all: Vec<usize> = (0..p.n_samples()).collect();
        let (_, g) = p.loss_grad(&w, &all);
        assert!(g.norm() < 1e-12);
        let mut off = w.clone();
        off[0] += 0.1;
        assert!(p.objective(&off) > p.optimum());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = QuadraticProblem::generate(QuadraticSpec {
            dim: 4,
            ..Default::default()
        })
        .unwrap();
        let at = [0.3, -1.0, 2.0, 0.0];
        let batch = [0, 3, 7];
        let (_, g) = p.loss_grad(&at, &batch);
        let fd = central_difference(|w| p.loss_grad(w, &batch).0, &at, 1e-5);
        assert!(max_relative_error(&g, &fd) < 1e-8);
    }
}
