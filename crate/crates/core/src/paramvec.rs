//! Dense parameter vectors.
//!
//! Every vector-valued quantity the algorithms touch (models, gradients,
//! moments, tracking terms, Adam directions) is a [`ParamVector`]. Binary
//! operations check lengths and return [`FedError::Dimension`] on mismatch.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(data: Vec<f64>) -> Self {
        ParamVector(data)
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        ParamVector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(FedError::Dimension {
                expected,
                found: self.dim(),
            })
        }
    }

    fn zip_with(&self, other: &ParamVector, f: impl Fn(f64, f64) -> f64) -> Result<ParamVector> {
        other.check_dim(self.dim())?;
        Ok(ParamVector(
            self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self += factor * other`
    pub fn axpy(&mut self, factor: f64, other: &ParamVector) -> Result<()> {
        other.check_dim(self.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dist(&self, other: &ParamVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, idx: usize) -> &f64 {
        &self.0[idx]
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl<'a> IntoIterator for &'a ParamVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Coordinatewise product `a ⊙ b`.
pub fn hadamard(a: &ParamVector, b: &ParamVector) -> Result<ParamVector> {
    a.zip_with(b, |x, y| x * y)
}

/// Coordinatewise maximum, the AMSGrad running-max primitive.
pub fn elementwise_max(a: &ParamVector, b: &ParamVector) -> Result<ParamVector> {
    a.zip_with(b, f64::max)
}

/// Adam direction `m / (sqrt(v_hat) + eps)`, with `eps` outside the root.
pub fn adam_direction(m: &ParamVector, v_hat: &ParamVector, eps: f64) -> Result<ParamVector> {
    v_hat.check_dim(m.dim())?;
    if !(eps > 0.0) {
        return Err(FedError::domain(format!("eps must be positive, got {eps}")));
    }
    if let Some((j, v)) = v_hat.iter().enumerate().find(|(_, v)| **v < 0.0 || v.is_nan()) {
        return Err(FedError::domain(format!("second moment entry {j} is negative ({v})")));
    }
    Ok(m.zip_with(v_hat, |mj, vj| mj / (vj.sqrt() + eps)).expect("checked"))
}

/// Sums `vectors` in the given order with a fixed pairwise tree.
///
/// The tree shape depends only on the number of terms, so the result is
/// bit-identical for a given ordered input regardless of who computes it.
/// Callers pass terms in ascending client-index order.
pub fn ordered_sum(dim: usize, vectors: &[&ParamVector]) -> Result<ParamVector> {
    for v in vectors {
        v.check_dim(dim)?;
    }
    Ok(pairwise(dim, vectors))
}

fn pairwise(dim: usize, vectors: &[&ParamVector]) -> ParamVector {
    match vectors.len() {
        0 => ParamVector::zeros(dim),
        1 => vectors[0].clone(),
        len => {
            let (left, right) = vectors.split_at(len / 2);
            let mut acc = pairwise(dim, left);
            let rhs = pairwise(dim, right);
            for (a, b) in acc.0.iter_mut().zip(&rhs.0) {
                *a += b;
            }
            acc
        }
    }
}
