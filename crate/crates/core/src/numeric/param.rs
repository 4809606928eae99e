use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Result};

/// Flat vector of model parameters or model updates.
///
/// All arithmetic is 64-bit. Binary operations check that both operands have
/// the same dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn add(&self, other: &[f64]) -> Result<Self> {
        ensure_same_len(self.len(), other.len())?;
        Ok(self.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Result<Self> {
        ensure_same_len(self.len(), other.len())?;
        Ok(self.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.iter().map(|a| a * factor).collect()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &[f64]) -> Result<()> {
        ensure_same_len(self.len(), other.len())?;
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn dot(&self, other: &[f64]) -> Result<f64> {
        ensure_same_len(self.len(), other.len())?;
        Ok(self.iter().zip(other).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|a| a.is_finite())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl FromIterator<f64> for ParamVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn arithmetic() {
        let a = ParamVector::from(vec![1.0, 2.0]);
        let b = [0.5, -1.0];
        assert_eq!(a.add(&b).unwrap().as_slice(), &[1.5, 1.0]);
        assert_eq!(a.sub(&b).unwrap().as_slice(), &[0.5, 3.0]);
        assert_eq!(a.dot(&b).unwrap(), -1.5);
        let mut c = a.clone();
        c.axpy(2.0, &b).unwrap();
        assert_eq!(c.as_slice(), &[2.0, 0.0]);
        assert_eq!(a.norm_inf(), 2.0);
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = ParamVector::zeros(3);
        assert!(matches!(
            a.add(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
    }
}
