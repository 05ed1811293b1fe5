//! Distance oracles consumed by the generic indexing schemes.

use std::sync::Arc;

use crate::matrix::{MetricMode, SymbolMetric, SymbolQuasiMetric};

/// A (quasi-)distance on points of type `P`. The first argument is the query
/// side: left balls are `{x : distance(center, x) <= r}`.
pub trait Distance<P> {
    fn distance(&self, from: &P, to: &P) -> f64;

    /// `true` only if `distance(a, b) == distance(b, a)` for every pair.
    fn is_symmetric(&self) -> bool;
}

impl<P, D: Distance<P> + ?Sized> Distance<P> for &D {
    fn distance(&self, from: &P, to: &P) -> f64 {
        (**self).distance(from, to)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

impl<P, D: Distance<P> + ?Sized> Distance<P> for Arc<D> {
    fn distance(&self, from: &P, to: &P) -> f64 {
        (**self).distance(from, to)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Distance<Vec<f64>> for Euclidean {
    fn distance(&self, from: &Vec<f64>, to: &Vec<f64>) -> f64 {
        from.iter().zip(to).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Manhattan;

impl Distance<Vec<f64>> for Manhattan {
    fn distance(&self, from: &Vec<f64>, to: &Vec<f64>) -> f64 {
        from.iter().zip(to).map(|(a, b)| (a - b).abs()).sum()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Ordinal-encoded strings under the summed symbol quasi-metric.
impl Distance<Vec<u8>> for SymbolQuasiMetric {
    fn distance(&self, from: &Vec<u8>, to: &Vec<u8>) -> f64 {
        f64::from(self.encoded_distance(from, to))
    }
    fn is_symmetric(&self) -> bool {
        SymbolQuasiMetric::is_symmetric(self)
    }
}

impl Distance<Vec<u8>> for SymbolMetric {
    fn distance(&self, from: &Vec<u8>, to: &Vec<u8>) -> f64 {
        f64::from(self.encoded_distance(from, to))
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `max(rho(x, y), rho(y, x))` or `rho(x, y) + rho(y, x)` on top of any oracle.
#[derive(Debug, Clone)]
pub struct Symmetrized<D> {
    pub inner: D,
    pub mode: MetricMode,
}

impl<D> Symmetrized<D> {
    pub fn new(inner: D, mode: MetricMode) -> Self {
        Symmetrized { inner, mode }
    }
}

impl<P, D: Distance<P>> Distance<P> for Symmetrized<D> {
    fn distance(&self, from: &P, to: &P) -> f64 {
        let (f, b) = (self.inner.distance(from, to), self.inner.distance(to, from));
        match self.mode {
            MetricMode::Max => f.max(b),
            MetricMode::Sum => f + b,
        }
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Wraps a closure; the caller asserts whether it is symmetric.
#[derive(Clone)]
pub struct FnDistance<F> {
    f: F,
    symmetric: bool,
}

impl<F> FnDistance<F> {
    pub fn new(f: F, symmetric: bool) -> Self {
        FnDistance { f, symmetric }
    }
}

impl<P, F: Fn(&P, &P) -> f64> Distance<P> for FnDistance<F> {
    fn distance(&self, from: &P, to: &P) -> f64 {
        (self.f)(from, to)
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// A precomputed distance table over point ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    n: usize,
    values: Vec<f64>,
    symmetric: bool,
}

impl DistanceTable {
    pub fn new(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "distance table must be n x n");
        let symmetric = (0..n).all(|i| (0..n).all(|j| values[i * n + j] == values[j * n + i]));
        DistanceTable { n, values, symmetric }
    }

    pub fn from_points<P, D: Distance<P>>(points: &[P], dist: &D) -> Self {
        let values = points.iter().flat_map(|a| points.iter().map(move |b| dist.distance(a, b))).collect();
        DistanceTable::new(points.len(), values)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

impl Distance<usize> for DistanceTable {
    fn distance(&self, from: &usize, to: &usize) -> f64 {
        self.get(*from, *to)
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}
