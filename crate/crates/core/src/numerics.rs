//! Dense and sparse vector arithmetic, norms, and the seeded generator
//! shared by every other module.
//!
//! Everything is `f64`. Operations that combine two vectors check their
//! lengths and return [`Error::DimensionMismatch`] rather than panicking.

use std::ops::{Index, IndexMut};

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

/// A dense real vector of fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        ParamVector(vec![value; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        axpy(-1.0, other, self)
    }

    pub fn scaled(&self, a: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|v| a * v).collect())
    }

    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        ParamVector(values)
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl<'a> IntoIterator for &'a ParamVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Sparse gradient: strictly increasing indices into a vector of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrad {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseGrad {
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::domain(format!(
                    "sparse indices must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(last, _)) = entries.last() {
            if last >= dim {
                return Err(Error::domain(format!(
                    "sparse index {last} out of range for dimension {dim}"
                )));
            }
        }
        Ok(SparseGrad { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// One gradient observation.
#[derive(Debug, Clone, PartialEq)]
pub enum GradSample {
    Dense(ParamVector),
    Sparse(SparseGrad),
}

impl GradSample {
    pub fn dense(values: Vec<f64>) -> Self {
        GradSample::Dense(ParamVector::new(values))
    }

    pub fn sparse(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        SparseGrad::new(dim, entries).map(GradSample::Sparse)
    }

    /// Builds a sparse sample holding the nonzero entries of `dense`.
    pub fn sparsify(dense: &ParamVector) -> Self {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        GradSample::Sparse(SparseGrad {
            dim: dense.len(),
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            GradSample::Dense(v) => v.len(),
            GradSample::Sparse(s) => s.dim,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, GradSample::Sparse(_))
    }

    pub fn to_dense(&self) -> ParamVector {
        match self {
            GradSample::Dense(v) => v.clone(),
            GradSample::Sparse(s) => {
                let mut out = ParamVector::zeros(s.dim);
                for &(i, v) in &s.entries {
                    out[i] = v;
                }
                out
            }
        }
    }

    /// Stored `(index, value)` pairs; every coordinate for a dense sample.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            GradSample::Dense(v) => Box::new(v.iter().copied().enumerate()),
            GradSample::Sparse(s) => Box::new(s.entries.iter().copied()),
        }
    }

    pub fn linf(&self) -> f64 {
        self.entries().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|(_, v)| v.is_finite())
    }
}

/// Returns `a * x + y`.
pub fn axpy(a: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    check_dims(y.len(), x.len())?;
    Ok(ParamVector(
        x.iter().zip(y.iter()).map(|(xi, yi)| a * xi + yi).collect(),
    ))
}

/// Elementwise `num / (cbrt(denom) + eps)`.
pub fn hadamard_scale(num: &ParamVector, denom: &ParamVector, eps: f64) -> Result<ParamVector> {
    check_dims(num.len(), denom.len())?;
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::domain(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    let mut out = Vec::with_capacity(num.len());
    for (i, (&n, &d)) in num.iter().zip(denom.iter()).enumerate() {
        if d < 0.0 {
            return Err(Error::domain(format!(
                "negative denominator {d} at coordinate {i}"
            )));
        }
        let scale = d.cbrt() + eps;
        if scale == 0.0 {
            return Err(Error::DivisionByZero { index: i });
        }
        out.push(n / scale);
    }
    Ok(ParamVector(out))
}

/// Euclidean and max norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

pub fn norms(x: &ParamVector) -> Norms {
    Norms {
        l2: x.l2(),
        linf: x.linf(),
    }
}

/// `sum_d g_d^2 / a_d`, the squared norm of `g` under `diag(a)^{-1}`.
pub fn weighted_inv_sq_norm(g: &ParamVector, a: &ParamVector) -> Result<f64> {
    check_dims(g.len(), a.len())?;
    let mut total = 0.0;
    for (i, (&gi, &ai)) in g.iter().zip(a.iter()).enumerate() {
        if !(ai > 0.0) {
            return Err(Error::domain(format!(
                "scaling must be positive, got {ai} at coordinate {i}"
            )));
        }
        total += gi * gi / ai;
    }
    Ok(total)
}

/// Deterministic generator used for sampling and fixture construction.
///
/// The stream is ChaCha with 8 rounds, keyed from the 64-bit seed through
/// `SeedableRng::seed_from_u64` (a PCG32 expansion of the seed into the
/// 256-bit key). ChaCha is counter based and its output does not depend on
/// platform endianness or word size, so a seed names the same stream
/// everywhere.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn normal_vector(&mut self, dim: usize) -> ParamVector {
        ParamVector((0..dim).map(|_| self.normal()).collect())
    }

    pub fn uniform_vector(&mut self, dim: usize, lo: f64, hi: f64) -> ParamVector {
        ParamVector((0..dim).map(|_| self.uniform_in(lo, hi)).collect())
    }
}
