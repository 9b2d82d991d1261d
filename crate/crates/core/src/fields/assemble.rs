//! Discretization of translation-invariant kernels.
//!
//! A kernel `K(x - y)` sampled on an `N^n` grid only needs its values on the
//! `(2N - 1)^n` difference lattice. The matrix is block Toeplitz; we embed it
//! in a block circulant of size `(2N)^n` and apply it with FFTs.

use faer::Mat;
use rayon::prelude::*;

use super::grid::Grid;
use super::operator::{FftNd, LinearOperator};
use crate::clifford::SpinMatrix;
use crate::kernels::Branch;
use crate::{Error, Result, C64, ZERO};

/// Default cap on dense storage: a square matrix of dimension 20 000.
pub const DEFAULT_MEMCAP_BYTES: u64 = 20_000 * 20_000 * 16;

/// The dense-storage cap in bytes, honouring `DIRAC_LAP_MEMCAP`.
pub fn memcap_bytes() -> u64 {
    std::env::var("DIRAC_LAP_MEMCAP")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MEMCAP_BYTES)
}

/// Fail if a dense `dim x dim` complex matrix would exceed the cap.
pub fn check_memcap(dim: usize) -> Result<()> {
    let cap = memcap_bytes();
    let need = (dim as u128) * (dim as u128) * 16;
    if need > cap as u128 {
        Err(Error::MemoryCap {
            dim,
            cap_bytes: cap,
        })
    } else {
        Ok(())
    }
}

/// Discretized translation-invariant kernel operator on a grid.
pub struct KernelOperator {
    pub grid: Grid,
    pub spinor_dim: usize,
    pub branch: Option<Branch>,
    pub label: String,
    /// Entries on the difference lattice, `s x s` row-major blocks, already
    /// multiplied by the cell volume.
    lattice: Vec<C64>,
    /// Fourier transform of the circulant embedding, layout `[a][b][k]`.
    symbol: Vec<C64>,
    fft: FftNd,
}

fn lattice_side(grid: &Grid) -> usize {
    2 * grid.points_per_axis - 1
}

impl KernelOperator {
    pub fn dim(&self) -> usize {
        self.grid.num_points() * self.spinor_dim
    }

    /// The `s x s` block coupling two grid points.
    pub fn block(&self, row_point: usize, col_point: usize) -> &[C64] {
        let n = self.grid.n;
        let np = self.grid.points_per_axis;
        let side = lattice_side(&self.grid);
        let a = self.grid.multi_index(row_point);
        let b = self.grid.multi_index(col_point);
        let mut l = 0;
        for k in 0..n {
            l = l * side + (a[k] + np - 1 - b[k]);
        }
        let ss = self.spinor_dim * self.spinor_dim;
        &self.lattice[l * ss..(l + 1) * ss]
    }

    /// Materialize the full matrix. Subject to the memory cap.
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        let dim = self.dim();
        check_memcap(dim)?;
        let s = self.spinor_dim;
        let pts = self.grid.num_points();
        let mut m = Mat::<C64>::zeros(dim, dim);
        for q in 0..pts {
            for p in 0..pts {
                let b = self.block(p, q);
                for i in 0..s {
                    for j in 0..s {
                        m[(p * s + i, q * s + j)] = b[i * s + j];
                    }
                }
            }
        }
        Ok(m)
    }

    /// Largest entry magnitude on the lattice.
    pub fn max_abs(&self) -> f64 {
        self.lattice.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise combination `a K_self + b K_other` of two operators on the same grid.
    pub fn combine(&self, a: C64, other: &KernelOperator, b: C64, label: &str) -> Result<Self> {
        if self.grid != other.grid || self.spinor_dim != other.spinor_dim {
            return Err(Error::invalid("combining operators on different grids"));
        }
        let lattice = self
            .lattice
            .iter()
            .zip(&other.lattice)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_lattice(
            self.grid.clone(),
            self.spinor_dim,
            self.branch,
            label.to_string(),
            lattice,
        ))
    }

    fn from_lattice(
        grid: Grid,
        spinor_dim: usize,
        branch: Option<Branch>,
        label: String,
        lattice: Vec<C64>,
    ) -> Self {
        let n = grid.n;
        let np = grid.points_per_axis;
        let m = 2 * np;
        let side = lattice_side(&grid);
        let s = spinor_dim;
        let ss = s * s;
        let fft = FftNd::new(&vec![m; n]);
        let len = fft.len();
        let mut symbol = vec![ZERO; ss * len];
        let lattice_points = side.pow(n as u32);
        for l in 0..lattice_points {
            // Lattice offset per axis is in [-(N-1), N-1]; wrap into [0, 2N).
            let mut rest = l;
            let mut circ = 0;
            let mut stride = 1;
            for _ in 0..n {
                let off = (rest % side) as isize - (np as isize - 1);
                rest /= side;
                circ += (off.rem_euclid(m as isize) as usize) * stride;
                stride *= m;
            }
            // The loop above walks axes from last to first, so strides match row-major order.
            for e in 0..ss {
                symbol[e * len + circ] = lattice[l * ss + e];
            }
        }
        symbol
            .par_chunks_mut(len)
            .for_each(|chunk| FftNd::new(&vec![m; n]).forward(chunk));
        Self {
            grid,
            spinor_dim,
            branch,
            label,
            lattice,
            symbol,
            fft,
        }
    }

    fn convolve(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        let s = self.spinor_dim;
        let n = self.grid.n;
        let np = self.grid.points_per_axis;
        let m = 2 * np;
        let len = self.fft.len();
        let pts = self.grid.num_points();

        let embed = |p: usize| -> usize {
            let idx = self.grid.multi_index(p);
            idx[..n].iter().fold(0, |acc, &i| acc * m + i)
        };
        let positions: Vec<usize> = (0..pts).map(embed).collect();

        let mut spectra = vec![ZERO; s * len];
        for b in 0..s {
            let buf = &mut spectra[b * len..(b + 1) * len];
            for (p, &pos) in positions.iter().enumerate() {
                buf[pos] = x[p * s + b];
            }
            self.fft.forward(buf);
        }
        let mut out = vec![ZERO; len];
        for a in 0..s {
            out.iter_mut().for_each(|v| *v = ZERO);
            for b in 0..s {
                let xb = &spectra[b * len..(b + 1) * len];
                if adjoint {
                    let sym = &self.symbol[(b * s + a) * len..(b * s + a + 1) * len];
                    for k in 0..len {
                        out[k] += sym[k].conj() * xb[k];
                    }
                } else {
                    let sym = &self.symbol[(a * s + b) * len..(a * s + b + 1) * len];
                    for k in 0..len {
                        out[k] += sym[k] * xb[k];
                    }
                }
            }
            self.fft.inverse(&mut out);
            for (p, &pos) in positions.iter().enumerate() {
                y[p * s + a] = out[pos];
            }
        }
    }
}

impl LinearOperator for KernelOperator {
    fn dim(&self) -> usize {
        KernelOperator::dim(self)
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.convolve(x, y, false)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.convolve(x, y, true)
    }
}

/// Assemble `K(x - y) h^n` off the diagonal and the given cell integral on it.
///
/// `kernel` receives the displacement `x - y` (length `n`) and returns the
/// `s x s` block; `diagonal` is the already integrated value `int_cell K`.
pub fn assemble_operator<F>(
    grid: &Grid,
    spinor_dim: usize,
    branch: Option<Branch>,
    label: &str,
    kernel: F,
    diagonal: &SpinMatrix,
) -> Result<KernelOperator>
where
    F: Fn(&[f64]) -> SpinMatrix + Sync,
{
    let dim = grid.num_points() * spinor_dim;
    check_memcap(dim)?;
    if diagonal.dim() != spinor_dim {
        return Err(Error::invalid("diagonal block has the wrong size"));
    }
    let n = grid.n;
    let np = grid.points_per_axis;
    let side = lattice_side(grid);
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let ss = spinor_dim * spinor_dim;
    let lattice_points = side.pow(n as u32);
    let mut lattice = vec![ZERO; lattice_points * ss];
    lattice
        .par_chunks_mut(ss)
        .enumerate()
        .for_each(|(l, out)| {
            let mut rest = l;
            let mut u = [0.0; 3];
            let mut zero = true;
            for k in (0..n).rev() {
                let off = (rest % side) as isize - (np as isize - 1);
                rest /= side;
                u[k] = off as f64 * h;
                zero &= off == 0;
            }
            if zero {
                out.copy_from_slice(diagonal.as_slice());
            } else {
                let block = kernel(&u[..n]);
                for (o, v) in out.iter_mut().zip(block.as_slice()) {
                    *o = v * vol;
                }
            }
        });
    if lattice.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid(format!("kernel {label:?} produced non-finite entries")));
    }
    Ok(KernelOperator::from_lattice(
        grid.clone(),
        spinor_dim,
        branch,
        label.to_string(),
        lattice,
    ))
}

/// Scalar kernel `k(x - y)` times the identity on spinors.
pub fn assemble_scalar<F>(
    grid: &Grid,
    spinor_dim: usize,
    branch: Option<Branch>,
    label: &str,
    kernel: F,
    diagonal: C64,
) -> Result<KernelOperator>
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    let diag = SpinMatrix::identity(spinor_dim).scale(diagonal);
    assemble_operator(
        grid,
        spinor_dim,
        branch,
        label,
        |u| SpinMatrix::identity(spinor_dim).scale(kernel(u)),
        &diag,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::DiracMatrices;
    use crate::fields::resolvent::dirac_operator;
    use crate::linalg::norm2;

    fn probe(dim: usize) -> Vec<C64> {
        (0..dim)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect()
    }

    fn dense_apply(m: &Mat<C64>, x: &[C64], adjoint: bool) -> Vec<C64> {
        let d = m.nrows();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if adjoint { m[(j, i)].conj() * x[j] } else { m[(i, j)] * x[j] })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fft_application_matches_dense() {
        for (n, np) in [(2usize, 6usize), (3, 4)] {
            let grid = Grid::new(n, 2.0, np, false).unwrap();
            let mats = DiracMatrices::new(n).unwrap();
            let op = dirac_operator(&grid, &mats, 0.5, 1.7, Branch::Plus).unwrap();
            let dense = op.to_dense().unwrap();
            let x = probe(op.dim());
            for adjoint in [false, true] {
                let fast = if adjoint { op.apply_adjoint_vec(&x) } else { op.apply_vec(&x) };
                let slow = dense_apply(&dense, &x, adjoint);
                let err: Vec<C64> = fast.iter().zip(&slow).map(|(a, b)| a - b).collect();
                assert!(norm2(&err) < 1e-12 * norm2(&slow), "n = {n}, adjoint = {adjoint}");
            }
        }
    }

    #[test]
    fn conjugate_branches_are_adjoint() {
        let grid = Grid::new(2, 2.0, 6, false).unwrap();
        let mats = DiracMatrices::new(2).unwrap();
        let p = dirac_operator(&grid, &mats, 0.0, 2.0, Branch::Plus).unwrap().to_dense().unwrap();
        let m = dirac_operator(&grid, &mats, 0.0, 2.0, Branch::Minus).unwrap().to_dense().unwrap();
        let d = p.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((p[(j, i)].conj() - m[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn zero_kernel_gives_zero_matrix() {
        let grid = Grid::new(2, 1.0, 4, false).unwrap();
        let op = assemble_scalar(&grid, 2, None, "zero", |_| ZERO, ZERO).unwrap();
        assert_eq!(op.max_abs(), 0.0);
    }

    #[test]
    fn memory_cap_rejects_large_grids() {
        let grid = Grid::new(3, 1.0, 64, false).unwrap();
        let err = assemble_scalar(&grid, 4, None, "big", |_| ZERO, ZERO);
        assert!(matches!(err, Err(Error::MemoryCap { .. })));
    }
}
