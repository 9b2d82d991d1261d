//! Dirac matrices and the symbol of `D_m = -i alpha . grad + m beta`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, ONE, ZERO};

/// Small dense complex square matrix, row-major.
///
/// Serialized as a list of rows, each entry a `[re, im]` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl SpinMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let d = self.dim * rhs.dim;
        let mut out = Self::zeros(d);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        out[(i * rhs.dim + k, j * rhs.dim + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self - &self.adjoint()).max_abs() <= tol
    }

    /// `y = self * x` for a spinor `x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.dim) {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

impl Serialize for SpinMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .data
            .chunks(self.dim)
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpinMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom("matrix rows must form a square"));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
        Ok(Self { dim, data })
    }
}

impl std::ops::Index<(usize, usize)> for SpinMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SpinMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &SpinMatrix {
    type Output = SpinMatrix;
    fn add(self, rhs: &SpinMatrix) -> SpinMatrix {
        SpinMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpinMatrix {
    type Output = SpinMatrix;
    fn sub(self, rhs: &SpinMatrix) -> SpinMatrix {
        SpinMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &SpinMatrix {
    type Output = SpinMatrix;
    fn mul(self, rhs: &SpinMatrix) -> SpinMatrix {
        let d = self.dim;
        let mut out = SpinMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

fn pauli() -> [SpinMatrix; 3] {
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        SpinMatrix::from_rows(&[&[ZERO, c(0.0, -1.0)], &[c(0.0, 1.0), ZERO]]),
        SpinMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        SpinMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
    ]
}

/// The anticommuting family `alpha_1..alpha_n, beta` acting on `C^(2^N)`,
/// `N = floor((n+1)/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracMatrices {
    dimension: usize,
    alphas: Vec<SpinMatrix>,
    beta: SpinMatrix,
}

/// Spinor dimension `2^floor((n+1)/2)`.
pub fn spinor_dim(n: usize) -> usize {
    1 << ((n + 1) / 2)
}

impl DiracMatrices {
    /// Builds the family for space dimension `n >= 2`.
    ///
    /// `n = 2` uses `alpha_1 = [[0,-i],[i,0]]`, `alpha_2 = [[0,1],[1,0]]`,
    /// `beta = diag(1,-1)`; `n = 3` the block form
    /// `beta = diag(I, -I)`, `alpha_i = offdiag(sigma_i, sigma_i)`. Higher
    /// dimensions are generated by tensor doubling: with `(a_1..a_k, b)` the
    /// family for `n - 2` (even `n`) or `n - 1` (odd `n`), the new family is
    /// `s1⊗a_j, s1⊗b [, s2⊗I]` with `beta = s3⊗I`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "Dirac matrices need space dimension n >= 2, got {n}"
            )));
        }
        let s = pauli();
        match n {
            2 => Ok(Self {
                dimension: 2,
                alphas: vec![s[0].clone(), s[1].clone()],
                beta: s[2].clone(),
            }),
            3 => {
                let i2 = SpinMatrix::identity(2);
                let z2 = SpinMatrix::zeros(2);
                let block = |tl: &SpinMatrix, tr: &SpinMatrix, bl: &SpinMatrix, br: &SpinMatrix| {
                    let mut m = SpinMatrix::zeros(4);
                    for i in 0..2 {
                        for j in 0..2 {
                            m[(i, j)] = tl[(i, j)];
                            m[(i, j + 2)] = tr[(i, j)];
                            m[(i + 2, j)] = bl[(i, j)];
                            m[(i + 2, j + 2)] = br[(i, j)];
                        }
                    }
                    m
                };
                let minus_i2 = i2.scale(-ONE);
                Ok(Self {
                    dimension: 3,
                    alphas: s.iter().map(|si| block(&z2, si, si, &z2)).collect(),
                    beta: block(&i2, &z2, &z2, &minus_i2),
                })
            }
            _ => {
                let base = if n % 2 == 0 {
                    Self::new(n - 2)?
                } else {
                    Self::new(n - 1)?
                };
                let d = base.spinor_dim();
                let mut alphas: Vec<SpinMatrix> =
                    base.alphas.iter().map(|a| s[0].kron(a)).collect();
                alphas.push(s[0].kron(&base.beta));
                if n % 2 == 0 {
                    alphas.push(s[1].kron(&SpinMatrix::identity(d)));
                }
                Ok(Self {
                    dimension: n,
                    alphas,
                    beta: s[2].kron(&SpinMatrix::identity(d)),
                })
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn spinor_dim(&self) -> usize {
        self.beta.dim()
    }

    pub fn alphas(&self) -> &[SpinMatrix] {
        &self.alphas
    }

    pub fn alpha(&self, j: usize) -> &SpinMatrix {
        &self.alphas[j]
    }

    pub fn beta(&self) -> &SpinMatrix {
        &self.beta
    }

    /// Conjugates every matrix by a unitary `u`: `a -> u a u^*`.
    pub fn conjugated(&self, u: &SpinMatrix) -> Self {
        let ud = u.adjoint();
        Self {
            dimension: self.dimension,
            alphas: self.alphas.iter().map(|a| &(u * a) * &ud).collect(),
            beta: &(u * &self.beta) * &ud,
        }
    }

    /// Largest entrywise violation of the anticommutation relations and of
    /// Hermiticity.
    pub fn relation_defect(&self) -> f64 {
        let d = self.spinor_dim();
        let id = SpinMatrix::identity(d);
        let mut worst: f64 = 0.0;
        for (j, aj) in self.alphas.iter().enumerate() {
            for (k, ak) in self.alphas.iter().enumerate() {
                let target = if j == k { id.scale(C64::from(2.0)) } else { SpinMatrix::zeros(d) };
                let ac = &(aj * ak) + &(ak * aj);
                worst = worst.max((&ac - &target).max_abs());
            }
            let ab = &(aj * &self.beta) + &(&self.beta * aj);
            worst = worst.max(ab.max_abs());
            worst = worst.max((aj - &aj.adjoint()).max_abs());
        }
        worst = worst.max((&(&self.beta * &self.beta) - &id).max_abs());
        worst.max((&self.beta - &self.beta.adjoint()).max_abs())
    }

    /// `alpha . v` for a real vector `v`.
    pub fn alpha_dot(&self, v: &[f64]) -> SpinMatrix {
        let mut out = SpinMatrix::zeros(self.spinor_dim());
        for (a, &c) in self.alphas.iter().zip(v) {
            if c != 0.0 {
                for (o, x) in out.data.iter_mut().zip(&a.data) {
                    *o += x * c;
                }
            }
        }
        out
    }

    /// Fourier symbol of `D_m`: `alpha . xi + m beta`.
    pub fn symbol(&self, xi: &[f64], m: f64) -> SpinMatrix {
        assert_eq!(xi.len(), self.dimension, "frequency length must equal n");
        &self.alpha_dot(xi) + &self.beta.scale(C64::from(m))
    }
}

/// Free-function form of [`DiracMatrices::new`].
pub fn build_dirac_matrices(n: usize) -> Result<DiracMatrices> {
    DiracMatrices::new(n)
}

/// Free-function form of [`DiracMatrices::symbol`].
pub fn dirac_symbol(mats: &DiracMatrices, xi: &[f64], m: f64) -> SpinMatrix {
    mats.symbol(xi, m)
}
