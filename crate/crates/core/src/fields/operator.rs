//! Matrix-free operators on spinor grid functions.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{C64, ZERO};

/// A square complex matrix known through its action and the action of its adjoint.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]);

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply(x, &mut y);
        y
    }

    fn apply_adjoint_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_adjoint(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply_adjoint(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply_adjoint(x, y)
    }
}

impl<T: LinearOperator + Send + ?Sized> LinearOperator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply_adjoint(x, y)
    }
}

/// Identity on a space of given dimension.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
    }
}

/// Multiplication by a real scalar function, repeated over the spinor components.
#[derive(Clone, Debug)]
pub struct ScalarMultiplier {
    pub spinor_dim: usize,
    pub values: Vec<f64>,
}

impl ScalarMultiplier {
    pub fn new(spinor_dim: usize, values: Vec<f64>) -> Self {
        Self { spinor_dim, values }
    }

    pub fn inverse(&self) -> Self {
        Self {
            spinor_dim: self.spinor_dim,
            values: self.values.iter().map(|v| 1.0 / v).collect(),
        }
    }
}

impl LinearOperator for ScalarMultiplier {
    fn dim(&self) -> usize {
        self.values.len() * self.spinor_dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let s = self.spinor_dim;
        for (p, &w) in self.values.iter().enumerate() {
            for a in 0..s {
                y[p * s + a] = x[p * s + a] * w;
            }
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y)
    }
}

/// Pointwise matrix multiplication `(Vf)(x) = V(x) f(x)`.
#[derive(Clone, Debug)]
pub struct BlockDiagonal {
    pub spinor_dim: usize,
    /// Row-major `spinor_dim x spinor_dim` blocks, one per grid point.
    pub blocks: Vec<C64>,
}

impl BlockDiagonal {
    pub fn zeros(points: usize, spinor_dim: usize) -> Self {
        Self {
            spinor_dim,
            blocks: vec![ZERO; points * spinor_dim * spinor_dim],
        }
    }

    pub fn points(&self) -> usize {
        self.blocks.len() / (self.spinor_dim * self.spinor_dim)
    }

    pub fn block(&self, p: usize) -> &[C64] {
        let ss = self.spinor_dim * self.spinor_dim;
        &self.blocks[p * ss..(p + 1) * ss]
    }

    pub fn block_mut(&mut self, p: usize) -> &mut [C64] {
        let ss = self.spinor_dim * self.spinor_dim;
        &mut self.blocks[p * ss..(p + 1) * ss]
    }

    /// Largest pointwise Frobenius-free bound: max over points of the block operator norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.points())
            .map(|p| crate::linalg::small_spectral_norm(self.block(p), self.spinor_dim))
            .fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry over all blocks.
    pub fn hermitian_defect(&self) -> f64 {
        let s = self.spinor_dim;
        let mut worst: f64 = 0.0;
        for p in 0..self.points() {
            let b = self.block(p);
            for i in 0..s {
                for j in 0..s {
                    worst = worst.max((b[i * s + j] - b[j * s + i].conj()).norm());
                }
            }
        }
        worst
    }

    /// `self + c I`.
    pub fn shifted(&self, c: C64) -> Self {
        let mut out = self.clone();
        let s = self.spinor_dim;
        for p in 0..self.points() {
            let b = out.block_mut(p);
            for a in 0..s {
                b[a * s + a] += c;
            }
        }
        out
    }

    /// Multiply each block on both sides by the scalar weights.
    pub fn scaled_by(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for p in 0..self.points() {
            let f = left[p] * right[p];
            out.block_mut(p).iter_mut().for_each(|v| *v *= f);
        }
        out
    }
}

impl LinearOperator for BlockDiagonal {
    fn dim(&self) -> usize {
        self.points() * self.spinor_dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let s = self.spinor_dim;
        for p in 0..self.points() {
            let b = self.block(p);
            for i in 0..s {
                let mut acc = ZERO;
                for j in 0..s {
                    acc += b[i * s + j] * x[p * s + j];
                }
                y[p * s + i] = acc;
            }
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let s = self.spinor_dim;
        for p in 0..self.points() {
            let b = self.block(p);
            for i in 0..s {
                let mut acc = ZERO;
                for j in 0..s {
                    acc += b[j * s + i].conj() * x[p * s + j];
                }
                y[p * s + i] = acc;
            }
        }
    }
}

/// Product `A_1 A_2 ... A_k`, applied right to left.
pub struct Product<'a> {
    factors: Vec<&'a dyn LinearOperator>,
}

impl<'a> Product<'a> {
    pub fn new(factors: Vec<&'a dyn LinearOperator>) -> Self {
        assert!(!factors.is_empty(), "empty operator product");
        let d = factors[0].dim();
        assert!(factors.iter().all(|f| f.dim() == d), "dimension mismatch in product");
        Self { factors }
    }
}

impl LinearOperator for Product<'_> {
    fn dim(&self) -> usize {
        self.factors[0].dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut cur = x.to_vec();
        let mut next = vec![ZERO; x.len()];
        for f in self.factors.iter().rev() {
            f.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        y.copy_from_slice(&cur);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let mut cur = x.to_vec();
        let mut next = vec![ZERO; x.len()];
        for f in self.factors.iter() {
            f.apply_adjoint(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        y.copy_from_slice(&cur);
    }
}

/// `c_0 I + sum_k c_k A_k`.
pub struct Combination<'a> {
    dim: usize,
    identity: C64,
    terms: Vec<(C64, &'a dyn LinearOperator)>,
}

impl<'a> Combination<'a> {
    pub fn new(dim: usize, identity: C64, terms: Vec<(C64, &'a dyn LinearOperator)>) -> Self {
        assert!(terms.iter().all(|(_, t)| t.dim() == dim), "dimension mismatch in sum");
        Self {
            dim,
            identity,
            terms,
        }
    }

    /// `A - B`.
    pub fn difference(a: &'a dyn LinearOperator, b: &'a dyn LinearOperator) -> Self {
        Self::new(
            a.dim(),
            ZERO,
            vec![(C64::new(1.0, 0.0), a), (C64::new(-1.0, 0.0), b)],
        )
    }
}

impl LinearOperator for Combination<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.identity * xi;
        }
        let mut tmp = vec![ZERO; self.dim];
        for (c, t) in &self.terms {
            t.apply(x, &mut tmp);
            for (yi, ti) in y.iter_mut().zip(&tmp) {
                *yi += c * ti;
            }
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.identity.conj() * xi;
        }
        let mut tmp = vec![ZERO; self.dim];
        for (c, t) in &self.terms {
            t.apply_adjoint(x, &mut tmp);
            for (yi, ti) in y.iter_mut().zip(&tmp) {
                *yi += c.conj() * ti;
            }
        }
    }
}

/// Adjoint view of an operator.
pub struct Adjoint<'a>(pub &'a dyn LinearOperator);

impl LinearOperator for Adjoint<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply_adjoint(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y)
    }
}

/// Dense matrix as an operator.
pub struct DenseOperator(pub faer::Mat<C64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let m = &self.0;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (j, xj) in x.iter().enumerate() {
                acc += m[(i, j)] * xj;
            }
            *yi = acc;
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let m = &self.0;
        y.iter_mut().for_each(|v| *v = ZERO);
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += m[(i, j)].conj() * xi;
            }
        }
    }
}

/// Multi-dimensional complex FFT on row-major arrays.
pub(crate) struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            forward: dims.iter().map(|&d| planner.plan_fft_forward(d)).collect(),
            inverse: dims.iter().map(|&d| planner.plan_fft_inverse(d)).collect(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn transform(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        let total = self.len();
        debug_assert_eq!(data.len(), total);
        let mut line = Vec::new();
        for (axis, plan) in plans.iter().enumerate() {
            let len = self.dims[axis];
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                plan.process(data);
                continue;
            }
            line.resize(len, ZERO);
            let block = len * stride;
            for outer in 0..total / block {
                let base = outer * block;
                for inner in 0..stride {
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + inner + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + inner + k * stride] = *v;
                    }
                }
            }
        }
    }

    pub(crate) fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/len` normalization.
    pub(crate) fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}
