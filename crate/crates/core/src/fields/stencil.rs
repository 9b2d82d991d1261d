//! Finite-difference differential operators on the grid.
//!
//! Second-order central differences inside the box and second-order
//! one-sided differences on the two outermost nodes of each line. These are
//! the "local" counterparts of the assembled integral operators and are used
//! to check that the latter invert the former as the grid is refined.

use crate::clifford::DiracMatrices;
use crate::fields::Grid;
use crate::{Error, Result, C64, I, ZERO};

/// `d/dx_axis` of every component of `u`.
pub fn partial(grid: &Grid, spinor_dim: usize, axis: usize, u: &[C64]) -> Result<Vec<C64>> {
    check(grid, spinor_dim, u)?;
    if axis >= grid.n {
        return Err(Error::invalid(format!("axis {axis} out of range for n = {}", grid.n)));
    }
    let np = grid.points_per_axis;
    if np < 3 {
        return Err(Error::invalid("finite differences need at least three points per axis"));
    }
    let h = grid.spacing();
    let stride = np.pow((grid.n - 1 - axis) as u32);
    let s = spinor_dim;
    let mut out = vec![ZERO; u.len()];
    for p in 0..grid.num_points() {
        let i = (p / stride) % np;
        let at = |k: isize| &u[((p as isize + k * stride as isize) as usize) * s..][..s];
        let dst = &mut out[p * s..(p + 1) * s];
        if grid.periodic {
            let fwd = if i + 1 == np { -(np as isize - 1) } else { 1 };
            let bwd = if i == 0 { np as isize - 1 } else { -1 };
            for a in 0..s {
                dst[a] = (at(fwd)[a] - at(bwd)[a]) / (2.0 * h);
            }
        } else if i == 0 {
            for a in 0..s {
                dst[a] = (-3.0 * at(0)[a] + 4.0 * at(1)[a] - at(2)[a]) / (2.0 * h);
            }
        } else if i + 1 == np {
            for a in 0..s {
                dst[a] = (3.0 * at(0)[a] - 4.0 * at(-1)[a] + at(-2)[a]) / (2.0 * h);
            }
        } else {
            for a in 0..s {
                dst[a] = (at(1)[a] - at(-1)[a]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

/// `(-i alpha . grad + m beta) u` by finite differences.
pub fn dirac_stencil(mats: &DiracMatrices, m: f64, grid: &Grid, u: &[C64]) -> Result<Vec<C64>> {
    let s = mats.spinor_dim();
    if mats.dimension() != grid.n {
        return Err(Error::invalid("Clifford family and grid dimensions differ"));
    }
    let mut out = vec![ZERO; u.len()];
    let mut tmp = vec![ZERO; s];
    for k in 0..grid.n {
        let du = partial(grid, s, k, u)?;
        let alpha = mats.alpha(k);
        for (src, dst) in du.chunks(s).zip(out.chunks_mut(s)) {
            alpha.apply(src, &mut tmp);
            for a in 0..s {
                dst[a] += -I * tmp[a];
            }
        }
    }
    if m != 0.0 {
        for (src, dst) in u.chunks(s).zip(out.chunks_mut(s)) {
            mats.beta().apply(src, &mut tmp);
            for a in 0..s {
                dst[a] += m * tmp[a];
            }
        }
    }
    Ok(out)
}

/// `-Laplace u` by the standard `2n + 1` point stencil.
///
/// On a non-periodic box the outermost nodes use the one-sided second
/// difference `(u_0 - 2 u_1 + u_2) / h^2`.
pub fn negative_laplacian(grid: &Grid, spinor_dim: usize, u: &[C64]) -> Result<Vec<C64>> {
    check(grid, spinor_dim, u)?;
    let np = grid.points_per_axis;
    if np < 3 {
        return Err(Error::invalid("finite differences need at least three points per axis"));
    }
    let h2 = grid.spacing().powi(2);
    let s = spinor_dim;
    let mut out = vec![ZERO; u.len()];
    for axis in 0..grid.n {
        let stride = np.pow((grid.n - 1 - axis) as u32);
        for p in 0..grid.num_points() {
            let i = (p / stride) % np;
            let at = |k: isize| &u[((p as isize + k * stride as isize) as usize) * s..][..s];
            let (a_, b_, c_) = if grid.periodic {
                let fwd = if i + 1 == np { -(np as isize - 1) } else { 1 };
                let bwd = if i == 0 { np as isize - 1 } else { -1 };
                (at(bwd), at(0), at(fwd))
            } else if i == 0 {
                (at(0), at(1), at(2))
            } else if i + 1 == np {
                (at(-2), at(-1), at(0))
            } else {
                (at(-1), at(0), at(1))
            };
            for a in 0..s {
                out[p * s + a] -= (a_[a] - 2.0 * b_[a] + c_[a]) / h2;
            }
        }
    }
    Ok(out)
}

fn check(grid: &Grid, spinor_dim: usize, u: &[C64]) -> Result<()> {
    if u.len() != grid.num_points() * spinor_dim {
        return Err(Error::invalid("field does not match the grid"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SpinorField;

    #[test]
    fn derivatives_of_a_quadratic_are_exact() {
        let grid = Grid::new(2, 2.0, 9, false).unwrap();
        let f = SpinorField::sample(&grid, 1, |x| vec![C64::new(x[0] * x[0] + 3.0 * x[1], 0.0)]);
        let dx = partial(&grid, 1, 0, &f.values).unwrap();
        let dy = partial(&grid, 1, 1, &f.values).unwrap();
        let lap = negative_laplacian(&grid, 1, &f.values).unwrap();
        for p in 0..grid.num_points() {
            let x = grid.point(p);
            assert!((dx[p].re - 2.0 * x[0]).abs() < 1e-12);
            assert!((dy[p].re - 3.0).abs() < 1e-12);
            assert!((lap[p].re + 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dirac_stencil_squares_to_klein_gordon_on_a_plane_wave() {
        // On a periodic plane wave the central difference multiplies by i sin(k h)/h.
        let grid = Grid::new(2, 4.0, 16, true).unwrap();
        let mats = DiracMatrices::new(2).unwrap();
        let k = 2.0 * std::f64::consts::PI / 8.0;
        let f = SpinorField::sample(&grid, 2, |x| {
            let e = C64::from_polar(1.0, k * x[0]);
            vec![e, 0.5 * e]
        });
        let once = dirac_stencil(&mats, 0.7, &grid, &f.values).unwrap();
        let twice = dirac_stencil(&mats, 0.7, &grid, &once).unwrap();
        let keff = (k * grid.spacing()).sin() / grid.spacing();
        let want = keff * keff + 0.49;
        for (a, b) in twice.iter().zip(&f.values) {
            assert!((a - want * b).norm() < 1e-10);
        }
    }
}
