//! Scalar fields on R^N evaluated pointwise.
//!
//! Fields never fail: evaluators that can refuse a point (outside a domain,
//! on a singularity) return NaN, and the integrators reject non-finite samples.

use nalgebra::DVector;

use crate::fd;

pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn value(&self, y: &[f64]) -> f64;

    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        fd::gradient(|p| self.value(p), y)
    }

    fn laplacian(&self, y: &[f64]) -> f64 {
        fd::laplacian(|p| self.value(p), y)
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        (**self).value(y)
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        (**self).gradient(y)
    }
    fn laplacian(&self, y: &[f64]) -> f64 {
        (**self).laplacian(y)
    }
}

/// `u ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Zero(pub usize);

impl Field for Zero {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _: &[f64]) -> DVector<f64> {
        DVector::zeros(self.0)
    }
    fn laplacian(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// `u(y) = offset + ⟨slope, y⟩`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub offset: f64,
    pub slope: Vec<f64>,
}

impl Field for Affine {
    fn dim(&self) -> usize {
        self.slope.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.offset + self.slope.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }
    fn gradient(&self, _: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(&self.slope)
    }
    fn laplacian(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// `α·u + β·v`, with gradients combined linearly.
pub struct Combination<U, V> {
    pub alpha: f64,
    pub u: U,
    pub beta: f64,
    pub v: V,
}

impl<U: Field, V: Field> Field for Combination<U, V> {
    fn dim(&self) -> usize {
        self.u.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.alpha * self.u.value(y) + self.beta * self.v.value(y)
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        self.u.gradient(y) * self.alpha + self.v.gradient(y) * self.beta
    }
    fn laplacian(&self, y: &[f64]) -> f64 {
        self.alpha * self.u.laplacian(y) + self.beta * self.v.laplacian(y)
    }
}

/// Wraps a field so that only its values are used; gradient and Laplacian
/// fall back to finite differences.
pub struct ValuesOnly<F>(pub F);

impl<F: Field> Field for ValuesOnly<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.0.value(y)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
