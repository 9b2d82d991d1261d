//! Weighted `L^2` operator norms and the dyadic `B` / `B*` norms.
//!
//! Shells are `D_0 = {|x| <= 1}` and `D_j = {2^{j-1} < |x| <= 2^j}` for
//! `j >= 1`, truncated to the grid box. The box corner sits at radius
//! `L sqrt(n)`, which fixes the last shell index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, SpinorField};
use super::operator::{LinearOperator, Product, ScalarMultiplier};
use crate::linalg::{self, power_norm, power_norm_above, NormEstimate, NORM_MAX_ITER, NORM_TOL};
use crate::{Error, Result, C64, ZERO};

/// Partition of the grid points into dyadic shells.
#[derive(Clone, Debug)]
pub struct DyadicShells {
    pub j_max: usize,
    /// Shell index of every grid point.
    pub shell_of: Vec<usize>,
}

/// Shell index of a radius.
pub fn shell_index(r: f64) -> usize {
    if r <= 1.0 {
        0
    } else {
        r.log2().ceil().max(1.0) as usize
    }
}

impl DyadicShells {
    pub fn new(grid: &Grid) -> Self {
        let corner = grid.half_width * (grid.n as f64).sqrt();
        let j_max = shell_index(corner);
        let shell_of = (0..grid.num_points())
            .map(|p| shell_index(grid.radius(p)).min(j_max))
            .collect();
        Self { j_max, shell_of }
    }

    pub fn count(&self) -> usize {
        self.j_max + 1
    }

    /// Indicator of shell `j` as a multiplication operator.
    pub fn projector(&self, j: usize, spinor_dim: usize) -> ScalarMultiplier {
        ScalarMultiplier::new(
            spinor_dim,
            self.shell_of
                .iter()
                .map(|&s| if s == j { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    pub fn is_empty(&self, j: usize) -> bool {
        !self.shell_of.iter().any(|&s| s == j)
    }

    /// `L^2(D_j)` norms of a coefficient vector.
    pub fn shell_norms(&self, grid: &Grid, spinor_dim: usize, values: &[C64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.count()];
        for (p, &j) in self.shell_of.iter().enumerate() {
            for a in 0..spinor_dim {
                acc[j] += values[p * spinor_dim + a].norm_sqr();
            }
        }
        let vol = grid.cell_volume();
        acc.into_iter().map(|s| (s * vol).sqrt()).collect()
    }
}

fn dyadic(j: usize) -> f64 {
    2f64.powf(0.5 * j as f64)
}

/// `|f|_B = sum_j 2^{j/2} |f|_{L^2(D_j)}`.
pub fn b_norm(f: &SpinorField) -> f64 {
    let shells = DyadicShells::new(&f.grid);
    shells
        .shell_norms(&f.grid, f.spinor_dim, &f.values)
        .iter()
        .enumerate()
        .map(|(j, v)| dyadic(j) * v)
        .sum()
}

/// `|f|_{B*} = max_j 2^{-j/2} |f|_{L^2(D_j)}`.
pub fn bstar_norm(f: &SpinorField) -> f64 {
    let shells = DyadicShells::new(&f.grid);
    shells
        .shell_norms(&f.grid, f.spinor_dim, &f.values)
        .iter()
        .enumerate()
        .map(|(j, v)| v / dyadic(j))
        .fold(0.0, f64::max)
}

/// Lower and upper estimate of an operator norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// `| <x>^{-sigma} A <x>^{-sigma} |_{L^2 -> L^2}` by power iteration.
pub fn weighted_operator_norm(
    op: &dyn LinearOperator,
    grid: &Grid,
    sigma: f64,
) -> Result<NormEstimate> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("weight exponent sigma must be positive"));
    }
    let s = spinor_dim_of(op, grid)?;
    let w = ScalarMultiplier::new(s, grid.weight(sigma));
    let wa = Product::new(vec![&w, op, &w]);
    power_norm(&wa, None, NORM_TOL, NORM_MAX_ITER)
}

fn spinor_dim_of(op: &dyn LinearOperator, grid: &Grid) -> Result<usize> {
    let pts = grid.num_points();
    if op.dim() % pts != 0 {
        return Err(Error::invalid("operator dimension is not a multiple of the grid size"));
    }
    Ok(op.dim() / pts)
}

/// Relative size below which a shell block is treated as rounding noise.
pub const NOISE_LEVEL: f64 = 1e-12;

/// A few power steps: a lower estimate of `|A|` good enough to set a noise floor.
fn rough_norm(op: &dyn LinearOperator, start: &[C64]) -> f64 {
    let mut v = start.to_vec();
    let mut best: f64 = 0.0;
    for _ in 0..4 {
        let nv = linalg::norm2(&v);
        if nv == 0.0 {
            break;
        }
        linalg::scale(&mut v, 1.0 / nv);
        let av = op.apply_vec(&v);
        best = best.max(linalg::norm2(&av));
        v = op.apply_adjoint_vec(&av);
    }
    best
}

/// `| P_j A P_k |` for all shell pairs, row index `j`.
pub fn shell_block_norms(op: &dyn LinearOperator, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    let s = spinor_dim_of(op, grid)?;
    let shells = DyadicShells::new(grid);
    let count = shells.count();
    let projectors: Vec<ScalarMultiplier> = (0..count).map(|j| shells.projector(j, s)).collect();
    let pairs: Vec<(usize, usize)> = (0..count)
        .flat_map(|j| (0..count).map(move |k| (j, k)))
        .collect();
    let start = linalg::start_vector(op.dim());
    let floor = NOISE_LEVEL * rough_norm(op, &start);
    let values: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(j, k)| {
            if shells.is_empty(j) || shells.is_empty(k) {
                return Ok(0.0);
            }
            let block = Product::new(vec![&projectors[j], op, &projectors[k]]);
            let v0 = projectors[k].apply_vec(&start);
            Ok(power_norm_above(&block, Some(&v0), NORM_TOL, NORM_MAX_ITER, floor)?.value)
        })
        .collect();
    let mut table = vec![vec![0.0; count]; count];
    for ((j, k), v) in pairs.into_iter().zip(values) {
        table[j][k] = v?;
    }
    Ok(table)
}

/// `|A|_{B -> B*}`.
///
/// The unit ball of `B` is the closed convex hull of single-shell vectors
/// `2^{-k/2} f` with `f` in the unit sphere of `L^2(D_k)`, and `B*` is a
/// weighted maximum over shells. Hence the norm is exactly
/// `max_{j,k} 2^{-(j+k)/2} |P_j A P_k|`; both ends of the bracket carry
/// the same power-iteration value.
pub fn b_to_bstar_norm(op: &dyn LinearOperator, grid: &Grid) -> Result<Bracket> {
    let table = shell_block_norms(op, grid)?;
    let mut best: f64 = 0.0;
    for (j, row) in table.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            best = best.max(v / (dyadic(j) * dyadic(k)));
        }
    }
    Ok(Bracket { lo: best, hi: best })
}

/// `|A|_{B -> B}` bracketed.
///
/// Upper: `max_k sum_j 2^{(j-k)/2} |P_j A P_k|` (triangle inequality over
/// target shells). Lower: for each source shell, ascent on
/// `f -> |A f|_B` over unit vectors supported in that shell.
pub fn b_to_b_norm(op: &dyn LinearOperator, grid: &Grid) -> Result<Bracket> {
    let table = shell_block_norms(op, grid)?;
    let count = table.len();
    let mut hi: f64 = 0.0;
    for k in 0..count {
        let col: f64 = (0..count)
            .map(|j| table[j][k] * dyadic(j) / dyadic(k))
            .sum();
        hi = hi.max(col);
    }
    let lo = b_to_b_lower(op, grid)?;
    Ok(Bracket { lo: lo.min(hi), hi })
}

const ASCENT_TOL: f64 = 1e-6;
const ASCENT_MAX_ITER: usize = 500;

fn b_to_b_lower(op: &dyn LinearOperator, grid: &Grid) -> Result<f64> {
    let s = spinor_dim_of(op, grid)?;
    let shells = DyadicShells::new(grid);
    let count = shells.count();
    let start = linalg::start_vector(op.dim());
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|k| {
            if shells.is_empty(k) {
                return 0.0;
            }
            let pk = shells.projector(k, s);
            let mut f = pk.apply_vec(&start);
            let nf = linalg::norm2(&f);
            linalg::scale(&mut f, 1.0 / nf);
            let mut best = 0.0;
            for _ in 0..ASCENT_MAX_ITER {
                let af = op.apply_vec(&f);
                let norms = shells.shell_norms(grid, s, &af);
                // Objective in coefficient units: the factors h^{n/2} cancel
                // between |Af|_{L^2(D_j)} and |f|_{L^2}.
                let vol = grid.cell_volume().sqrt();
                let value: f64 = norms
                    .iter()
                    .enumerate()
                    .map(|(j, v)| dyadic(j) * v / vol)
                    .sum::<f64>()
                    / dyadic(k);
                let improved = value - best;
                best = f64::max(best, value);
                if improved.abs() <= ASCENT_TOL * value {
                    break;
                }
                // Gradient of sum_j 2^{j/2} |P_j A f|.
                let mut g = vec![ZERO; af.len()];
                for (p, &j) in shells.shell_of.iter().enumerate() {
                    if norms[j] > 0.0 {
                        let c = dyadic(j) * vol / norms[j];
                        for a in 0..s {
                            g[p * s + a] = af[p * s + a] * c;
                        }
                    }
                }
                let back = op.apply_adjoint_vec(&g);
                let mut next = pk.apply_vec(&back);
                let nn = linalg::norm2(&next);
                if nn == 0.0 {
                    break;
                }
                linalg::scale(&mut next, 1.0 / nn);
                f = next;
            }
            best
        })
        .collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::operator::Identity;

    #[test]
    fn shells_cover_the_box() {
        let grid = Grid::new(2, 8.0, 16, false).unwrap();
        let shells = DyadicShells::new(&grid);
        assert_eq!(shells.j_max, 4);
        assert!(shells.shell_of.iter().all(|&j| j <= shells.j_max));
        assert!(!shells.is_empty(shells.j_max));
    }

    #[test]
    fn single_shell_field_norms_agree() {
        let grid = Grid::new(2, 4.0, 16, false).unwrap();
        let f = SpinorField::sample(&grid, 2, |x| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let v = if r <= 1.0 { 1.0 - r } else { 0.0 };
            vec![C64::new(v, 0.0), C64::new(0.0, 0.5 * v)]
        });
        let l2 = f.l2_norm();
        assert!((b_norm(&f) - l2).abs() < 1e-14);
        assert!((bstar_norm(&f) - l2).abs() < 1e-14);
    }

    #[test]
    fn identity_weighted_norm() {
        let grid = Grid::new(2, 4.0, 16, false).unwrap();
        let id = Identity(grid.num_points() * 2);
        let est = weighted_operator_norm(&id, &grid, 1.0).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn identity_b_norms() {
        let grid = Grid::new(2, 4.0, 16, false).unwrap();
        let id = Identity(grid.num_points() * 2);
        // B -> B*: largest 2^{-j} over nonempty shells is attained at j = 0.
        let bs = b_to_bstar_norm(&id, &grid).unwrap();
        assert!((bs.hi - 1.0).abs() < 1e-6);
        let bb = b_to_b_norm(&id, &grid).unwrap();
        assert!((bb.hi - 1.0).abs() < 1e-6 && (bb.lo - 1.0).abs() < 1e-6);
    }
}
