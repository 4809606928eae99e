use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::param::ParamVector;
use super::rng::Prng;
use crate::error::{ensure_same_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelKind {
    /// Multinomial logistic regression. Convex in its parameters.
    LogisticRegression,
    /// One `tanh` hidden layer followed by a softmax output layer.
    Mlp { hidden: usize },
}

/// Softmax classifier with hand-written backpropagation.
///
/// Parameter layout, row-major: logistic regression stores `W (c×f)` then
/// `b (c)`; the MLP stores `W1 (h×f)`, `b1 (h)`, `W2 (c×h)`, `b2 (c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: ModelKind,
    n_features: usize,
    n_classes: usize,
    params: ParamVector,
}

impl Model {
    pub fn param_count(kind: ModelKind, n_features: usize, n_classes: usize) -> usize {
        match kind {
            ModelKind::LogisticRegression => n_classes * n_features + n_classes,
            ModelKind::Mlp { hidden } => hidden * n_features + hidden + n_classes * hidden + n_classes,
        }
    }

    pub fn zeros(kind: ModelKind, n_features: usize, n_classes: usize) -> Self {
        let d = Self::param_count(kind, n_features, n_classes);
        Self {
            kind,
            n_features,
            n_classes,
            params: ParamVector::zeros(d),
        }
    }

    /// Glorot-uniform weights, zero biases. Logistic regression starts at
    /// zero.
    pub fn init(kind: ModelKind, n_features: usize, n_classes: usize, rng: &mut Prng) -> Self {
        let mut m = Self::zeros(kind, n_features, n_classes);
        if let ModelKind::Mlp { hidden } = kind {
            let p = &mut m.params;
            let l1 = (6.0 / (n_features + hidden) as f64).sqrt();
            for w in &mut p[..hidden * n_features] {
                *w = rng.uniform_nonzero(-l1, l1);
            }
            let off = hidden * n_features + hidden;
            let l2 = (6.0 / (hidden + n_classes) as f64).sqrt();
            for w in &mut p[off..off + n_classes * hidden] {
                *w = rng.uniform_nonzero(-l2, l2);
            }
        }
        m
    }

    pub fn with_params(mut self, params: ParamVector) -> Result<Self> {
        ensure_same_len(self.params.len(), params.len())?;
        self.params = params;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        match self.kind {
            ModelKind::LogisticRegression => vec![self.n_features, self.n_classes],
            ModelKind::Mlp { hidden } => vec![self.n_features, hidden, self.n_classes],
        }
    }

    fn check(&self, data: &Dataset, at: &[f64]) -> Result<()> {
        ensure_same_len(self.dim(), at.len())?;
        if data.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: data.n_features(),
            });
        }
        if data.n_classes() > self.n_classes {
            return Err(Error::invalid("dataset has more classes than the model"));
        }
        Ok(())
    }

    /// Mean cross-entropy over `batch` and its gradient with respect to
    /// `at`.
    pub fn loss_grad(&self, data: &Dataset, batch: &[usize], at: &[f64]) -> Result<(f64, ParamVector)> {
        self.check(data, at)?;
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let mut grad = ParamVector::zeros(self.dim());
        let mut loss = 0.0;
        let mut scratch = Scratch::new(self);
        for &i in batch {
            loss += self.accumulate(at, data.row(i), data.label(i), &mut grad, &mut scratch);
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok((loss * inv, grad))
    }

    pub fn loss(&self, data: &Dataset, batch: &[usize], at: &[f64]) -> Result<f64> {
        self.loss_grad(data, batch, at).map(|(l, _)| l)
    }

    /// Mean loss and accuracy over the whole dataset.
    pub fn evaluate(&self, data: &Dataset, at: &[f64]) -> Result<(f64, f64)> {
        self.check(data, at)?;
        let mut scratch = Scratch::new(self);
        let mut loss = 0.0;
        let mut correct = 0usize;
        for i in 0..data.len() {
            self.forward(at, data.row(i), &mut scratch);
            let y = data.label(i);
            loss += -scratch.probs[y].max(f64::MIN_POSITIVE).ln();
            let pred = argmax(&scratch.probs);
            if pred == y {
                correct += 1;
            }
        }
        let n = data.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }

    fn forward(&self, p: &[f64], x: &[f64], s: &mut Scratch) {
        let (f, c) = (self.n_features, self.n_classes);
        match self.kind {
            ModelKind::LogisticRegression => {
                let (w, b) = p.split_at(c * f);
                for k in 0..c {
                    s.probs[k] = b[k] + dot(&w[k * f..(k + 1) * f], x);
                }
            }
            ModelKind::Mlp { hidden: h } => {
                let (w1, rest) = p.split_at(h * f);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                for j in 0..h {
                    s.hidden[j] = (b1[j] + dot(&w1[j * f..(j + 1) * f], x)).tanh();
                }
                for k in 0..c {
                    s.probs[k] = b2[k] + dot(&w2[k * h..(k + 1) * h], &s.hidden);
                }
            }
        }
        softmax_in_place(&mut s.probs);
    }

    fn accumulate(&self, p: &[f64], x: &[f64], y: usize, grad: &mut [f64], s: &mut Scratch) -> f64 {
        self.forward(p, x, s);
        let loss = -s.probs[y].max(f64::MIN_POSITIVE).ln();
        // dL/dlogits = softmax - onehot
        s.probs[y] -= 1.0;
        let (f, c) = (self.n_features, self.n_classes);
        match self.kind {
            ModelKind::LogisticRegression => {
                let (gw, gb) = grad.split_at_mut(c * f);
                for k in 0..c {
                    let d = s.probs[k];
                    gb[k] += d;
                    for (g, xi) in gw[k * f..(k + 1) * f].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            ModelKind::Mlp { hidden: h } => {
                let w2 = &p[h * f + h..h * f + h + c * h];
                let (gw1, rest) = grad.split_at_mut(h * f);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                s.dhidden.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..c {
                    let d = s.probs[k];
                    gb2[k] += d;
                    for j in 0..h {
                        gw2[k * h + j] += d * s.hidden[j];
                        s.dhidden[j] += d * w2[k * h + j];
                    }
                }
                for j in 0..h {
                    let dz = s.dhidden[j] * (1.0 - s.hidden[j] * s.hidden[j]);
                    gb1[j] += dz;
                    for (g, xi) in gw1[j * f..(j + 1) * f].iter_mut().zip(x) {
                        *g += dz * xi;
                    }
                }
            }
        }
        loss
    }
}

struct Scratch {
    hidden: Vec<f64>,
    dhidden: Vec<f64>,
    probs: Vec<f64>,
}

impl Scratch {
    fn new(m: &Model) -> Self {
        let h = match m.kind {
            ModelKind::Mlp { hidden } => hidden,
            ModelKind::LogisticRegression => 0,
        };
        Self {
            hidden: vec![0.0; h],
            dhidden: vec![0.0; h],
            probs: vec![0.0; m.n_classes],
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gradcheck::central_difference;
    use crate::numeric::rng::streams;

    fn toy() -> Dataset {
        Dataset::new(2, 2, vec![1.0, 0.5, -0.3, 2.0, 0.7, -1.1, -2.0, 0.1], vec![0, 1, 1, 0]).unwrap()
    }

    #[test]
    fn zero_logistic_loss_is_ln2() {
        let d = toy();
        let m = Model::zeros(ModelKind::LogisticRegression, 2, 2);
        let loss = m.loss(&d, &[0, 1, 2, 3], m.params()).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn duplicated_batch_is_invariant() {
        let d = toy();
        let mut rng = Prng::from_seed(1, streams::INIT);
        let m = Model::init(ModelKind::Mlp { hidden: 3 }, 2, 2, &mut rng);
        let (l1, g1) = m.loss_grad(&d, &[0, 1, 2], m.params()).unwrap();
        let (l2, g2) = m.loss_grad(&d, &[0, 0, 1, 1, 2, 2], m.params()).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mlp_matches_finite_differences() {
        let d = toy();
        let mut rng = Prng::from_seed(2, streams::INIT);
        let m = Model::init(ModelKind::Mlp { hidden: 4 }, 2, 2, &mut rng);
        let batch = [0, 1, 2, 3];
        let (_, g) = m.loss_grad(&d, &batch, m.params()).unwrap();
        let fd = central_difference(|p| m.loss(&d, &batch, p).unwrap(), m.params(), 1e-5);
        for (a, b) in g.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0));
        }
    }

    #[test]
    fn dimension_checks() {
        let d = toy();
        let m = Model::zeros(ModelKind::LogisticRegression, 2, 2);
        assert!(m.loss_grad(&d, &[0], &[0.0; 3]).is_err());
        assert!(m.loss_grad(&d, &[], m.params()).is_err());
        assert_eq!(m.dims(), vec![2, 2]);
        assert_eq!(Model::param_count(ModelKind::Mlp { hidden: 3 }, 2, 2), 6 + 3 + 6 + 2);
    }
}
