//! Assembled free resolvents with singular-cell quadrature.
//!
//! The diagonal cell is replaced by a ball of equal volume, on which the
//! radial kernels integrate in closed form. Odd (gradient) parts integrate to
//! zero over the ball.

use std::f64::consts::PI;

use super::assemble::{assemble_operator, assemble_scalar, KernelOperator};
use super::grid::Grid;
use crate::clifford::DiracMatrices;
use crate::kernels::{dirac_from_scalar, radial_kernel, Branch};
use crate::special::hankel1_1;
use crate::{Error, Result, C64, ZERO};

/// Radius of the ball with the volume of one grid cell.
pub fn equal_volume_radius(grid: &Grid) -> f64 {
    let vol = grid.cell_volume();
    match grid.n {
        2 => (vol / PI).sqrt(),
        _ => (3.0 * vol / (4.0 * PI)).cbrt(),
    }
}

/// `int_{|u| < rho} g(|u|) du` for the outgoing kernel, mapped to `branch`.
pub fn ball_integral(n: usize, z: f64, rho: f64, branch: Branch) -> C64 {
    let i = C64::new(0.0, 1.0);
    let value = if n == 3 {
        // int_0^rho r e^{izr} dr
        let zr = z * rho;
        if zr < 1e-4 {
            C64::new(0.5 * rho * rho, z * rho.powi(3) / 3.0)
        } else {
            C64::from_polar(1.0, zr) * (C64::new(1.0 / (z * z), 0.0) - i * rho / z)
                - 1.0 / (z * z)
        }
    } else {
        // (i pi / 2) int_0^rho r H_0(zr) dr, using (r H_1(zr))' = z r H_0(zr).
        i * PI / (2.0 * z) * rho * hankel1_1(z * rho) - 1.0 / (z * z)
    };
    branch.orient(value)
}

/// Cell integral of the Laplace-type singularity: `1/(4 pi r)` in 3D, `-(1/2pi) log r` in 2D.
pub fn static_ball_integral(n: usize, rho: f64) -> f64 {
    if n == 3 {
        0.5 * rho * rho
    } else {
        0.25 * rho * rho - 0.5 * rho * rho * rho.ln()
    }
}

/// `R_0(z^2)` times the spinor identity.
pub fn schrodinger_operator(
    grid: &Grid,
    spinor_dim: usize,
    z: f64,
    branch: Branch,
) -> Result<KernelOperator> {
    if !(z > 0.0) {
        return Err(Error::invalid("Schrodinger resolvent needs z > 0"));
    }
    let n = grid.n;
    let diag = ball_integral(n, z, equal_volume_radius(grid), branch);
    assemble_scalar(
        grid,
        spinor_dim,
        Some(branch),
        "schrodinger_resolvent",
        move |u| {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            branch.orient(radial_kernel(n, z, r).0)
        },
        diag,
    )
}

/// Free Dirac resolvent `(D_m - (lambda +- i0))^{-1}` for `|lambda| > m`.
pub fn dirac_operator(
    grid: &Grid,
    mats: &DiracMatrices,
    m: f64,
    lambda: f64,
    branch: Branch,
) -> Result<KernelOperator> {
    if mats.dimension() != grid.n {
        return Err(Error::invalid("Clifford family and grid dimensions differ"));
    }
    if !(lambda.abs() > m) {
        return Err(Error::invalid(format!(
            "free Dirac resolvent needs |lambda| > m (lambda = {lambda}, m = {m})"
        )));
    }
    let n = grid.n;
    let z = (lambda * lambda - m * m).sqrt();
    let sb = branch.for_energy(lambda);
    let cell = ball_integral(n, z, equal_volume_radius(grid), sb);
    let s = mats.spinor_dim();
    let diag = dirac_from_scalar(mats, m, lambda, cell, &[ZERO; 3][..n]);
    assemble_operator(
        grid,
        s,
        Some(branch),
        "dirac_resolvent",
        |u| {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (g, dg) = radial_kernel(n, z, r);
            let (g, dg) = (sb.orient(g), sb.orient(dg));
            let mut grad = [ZERO; 3];
            for k in 0..n {
                grad[k] = dg * (u[k] / r);
            }
            dirac_from_scalar(mats, m, lambda, g, &grad[..n])
        },
        &diag,
    )
}

/// Partial derivative `d/dx_axis` of a scalar radial kernel `k(r)` with derivative `k'`.
///
/// The kernel is odd, so the diagonal cell contributes nothing.
pub fn radial_gradient_operator<F>(
    grid: &Grid,
    spinor_dim: usize,
    branch: Option<Branch>,
    label: &str,
    axis: usize,
    derivative: F,
) -> Result<KernelOperator>
where
    F: Fn(f64) -> C64 + Sync,
{
    if axis >= grid.n {
        return Err(Error::invalid("derivative axis out of range"));
    }
    assemble_scalar(
        grid,
        spinor_dim,
        branch,
        label,
        |u| {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            derivative(r) * (u[axis] / r)
        },
        ZERO,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, n: usize) -> C64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn ball_integrals_match_quadrature() {
        let rho = 0.3;
        for &z in &[0.5, 2.0, 7.0] {
            let exact = ball_integral(3, z, rho, Branch::Plus);
            let num = simpson(|r| r * C64::from_polar(1.0, z * r), 0.0, rho, 2000);
            assert!((exact - num).norm() < 1e-10, "3D z = {z}");
            // 2D: substitute r = t^2 to tame the logarithm.
            let exact = ball_integral(2, z, rho, Branch::Plus);
            let num = simpson(
                |t| {
                    if t == 0.0 {
                        ZERO
                    } else {
                        let r = t * t;
                        2.0 * PI * r * radial_kernel(2, z, r).0 * 2.0 * t
                    }
                },
                0.0,
                rho.sqrt(),
                4000,
            );
            assert!((exact - num).norm() < 1e-8, "2D z = {z}: {exact} vs {num}");
        }
    }

    #[test]
    fn static_integrals() {
        let rho: f64 = 0.2;
        let num: f64 = (1..=20000)
            .map(|k| {
                let r = (k as f64 - 0.5) * rho / 20000.0;
                -r * r.ln() * rho / 20000.0
            })
            .sum();
        assert!((static_ball_integral(2, rho) - num).abs() < 1e-8);
    }
}
