//! Scaling measurements for truncated resolvents and the oscillatory operator.

use serde::{Deserialize, Serialize};

use super::partition::FullSphere;
use crate::fields::norms::b_to_bstar_norm;
use crate::fields::operator::{Product, ScalarMultiplier};
use crate::fields::resolvent::{ball_integral, equal_volume_radius};
use crate::fields::{assemble_scalar, Grid, KernelOperator};
use crate::kernels::{
    short_range_scalar, smoothstep, split_theta, truncated_scalar, AngularWeight, Branch,
    TruncationSpec,
};
use crate::linalg::operator_norm;
use crate::special::hankel1_0;
use crate::{Error, Result, I, ZERO};
#[cfg(test)]
use crate::C64;

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("an exponent fit needs at least two matched points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("an exponent fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("an exponent fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

fn check_lambdas(lambdas: &[f64], grid: &Grid) -> Result<f64> {
    if lambdas.len() < 2 {
        return Err(Error::invalid("a scaling check needs at least two energies"));
    }
    if lambdas.iter().any(|l| !(*l >= 1.0)) {
        return Err(Error::invalid("scaling checks need lambda >= 1"));
    }
    let top = lambdas.iter().cloned().fold(0.0, f64::max);
    let limit = std::f64::consts::PI / (4.0 * top);
    if grid.spacing() > limit * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "grid spacing {} does not resolve lambda = {top}; need h <= {limit}",
            grid.spacing()
        )));
    }
    Ok(top)
}

/// One measured norm per energy and the fitted power law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
    pub expected: f64,
}

impl ScalingTable {
    fn fit(lambdas: &[f64], norms: Vec<f64>, expected: f64) -> Result<Self> {
        let exponent = fit_exponent(lambdas, &norms)?;
        Ok(Self {
            lambdas: lambdas.to_vec(),
            norms,
            exponent,
            expected,
        })
    }

    /// `|exponent - expected| <= tol`.
    pub fn within(&self, tol: f64) -> bool {
        (self.exponent - self.expected).abs() <= tol
    }
}

/// `D^alpha R_{d,W}(lambda^2)` on scalar fields; `alpha_order = 1` differentiates along the last axis.
pub fn truncated_resolvent<W: AngularWeight + ?Sized>(
    lambda: f64,
    d: f64,
    angular: &W,
    alpha_order: u8,
    grid: &Grid,
) -> Result<KernelOperator> {
    let n = grid.n;
    let axis = n - 1;
    let label = format!("truncated_resolvent_d{alpha_order}");
    // The range cutoff vanishes near the origin, so does the diagonal cell.
    match alpha_order {
        0 => assemble_scalar(
            grid,
            1,
            Some(Branch::Plus),
            &label,
            |u| truncated_scalar(n, lambda, u, Branch::Plus, d, angular).0,
            ZERO,
        ),
        1 => assemble_scalar(
            grid,
            1,
            Some(Branch::Plus),
            &label,
            |u| truncated_scalar(n, lambda, u, Branch::Plus, d, angular).1[axis],
            ZERO,
        ),
        _ => Err(Error::invalid("derivative order must be 0 or 1")),
    }
}

/// `B -> B*` norms of `D^alpha R_{d,delta}(lambda^2)` with the cap centred on the last axis.
pub fn dir_res_scaling_check(
    d: f64,
    delta: f64,
    alpha_order: u8,
    lambdas: &[f64],
    grid: &Grid,
) -> Result<ScalingTable> {
    let mut pole = vec![0.0; grid.n];
    pole[grid.n - 1] = 1.0;
    let trunc = TruncationSpec::new(d, delta, pole)?;
    scaling_with(&trunc, d, alpha_order, lambdas, grid)
}

/// As [`dir_res_scaling_check`] without angular truncation.
pub fn full_sphere_scaling_check(
    d: f64,
    alpha_order: u8,
    lambdas: &[f64],
    grid: &Grid,
) -> Result<ScalingTable> {
    scaling_with(&FullSphere, d, alpha_order, lambdas, grid)
}

fn scaling_with<W: AngularWeight + ?Sized>(
    angular: &W,
    d: f64,
    alpha_order: u8,
    lambdas: &[f64],
    grid: &Grid,
) -> Result<ScalingTable> {
    if alpha_order > 1 {
        return Err(Error::invalid("derivative order must be 0 or 1"));
    }
    if !(d > 0.0) {
        return Err(Error::invalid("range cutoff d must be positive"));
    }
    check_lambdas(lambdas, grid)?;
    let norms = lambdas
        .iter()
        .map(|&l| {
            let op = truncated_resolvent(l, d, angular, alpha_order, grid)?;
            Ok(b_to_bstar_norm(&op, grid)?.hi)
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalingTable::fit(lambdas, norms, -1.0 + alpha_order as f64)
}

/// `D^alpha R_d(lambda^2)`, the short-range piece on scalar fields.
pub fn short_range_resolvent(lambda: f64, d: f64, alpha_order: u8, grid: &Grid) -> Result<KernelOperator> {
    let n = grid.n;
    let axis = n - 1;
    match alpha_order {
        0 => {
            let cell = ball_integral(n, lambda, equal_volume_radius(grid), Branch::Plus);
            assemble_scalar(
                grid,
                1,
                Some(Branch::Plus),
                "short_range_d0",
                |u| {
                    let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                    short_range_scalar(n, lambda, r, Branch::Plus, d).0
                },
                cell,
            )
        }
        1 => assemble_scalar(
            grid,
            1,
            Some(Branch::Plus),
            "short_range_d1",
            |u| {
                let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                short_range_scalar(n, lambda, r, Branch::Plus, d).1 * (u[axis] / r)
            },
            ZERO,
        ),
        _ => Err(Error::invalid("derivative order must be 0 or 1")),
    }
}

/// `L^2 -> L^2` norms of `R_d(lambda^2)` and `d/dx_n R_d(lambda^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortRangeTable {
    pub d: f64,
    pub order0: ScalingTable,
    pub order1: ScalingTable,
}

pub fn short_range_check(d: f64, lambdas: &[f64], grid: &Grid) -> Result<ShortRangeTable> {
    if !(d > 0.0) {
        return Err(Error::invalid("range cutoff d must be positive"));
    }
    check_lambdas(lambdas, grid)?;
    let measure = |order: u8| -> Result<Vec<f64>> {
        lambdas
            .iter()
            .map(|&l| operator_norm(&short_range_resolvent(l, d, order, grid)?))
            .collect()
    };
    // Reference slopes ignore <d lambda>, which adds up to one power at large d lambda.
    Ok(ShortRangeTable {
        d,
        order0: ScalingTable::fit(lambdas, measure(0)?, -2.0)?,
        order1: ScalingTable::fit(lambdas, measure(1)?, -1.0)?,
    })
}

/// Smooth indicator of the annulus `1 < |x| < 2`.
pub fn annulus_cutoff(r: f64) -> f64 {
    smoothstep((r - 1.0) / 0.25) * (1.0 - smoothstep((r - 1.75) / 0.25))
}

/// Measured norm of the oscillatory operator and the frozen-constant bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryCheck {
    pub delta: f64,
    pub p: f64,
    pub r1: f64,
    pub r2: f64,
    pub measured: f64,
    /// `C delta^{p - 1/2} sqrt(R1 R2)`.
    pub bound: f64,
    /// `C`, the measured norm at `delta = 1/2, p = 1/2, R1 = R2 = 1` on the same grid.
    pub constant: f64,
}

/// Norm of the operator with kernel
/// `chi(x/R1) e^{i|x-y|} |x-y|^{-p} a(|x-y|) Phi_delta((x-y)/|x-y|) chi(y/R2)`
/// on a two-dimensional grid, `a` being the amplitude of the far part of the split kernel.
pub fn oscillatory_operator_norm(delta: f64, p: f64, r1: f64, r2: f64, grid: &Grid) -> Result<f64> {
    if grid.n != 2 {
        return Err(Error::invalid("the oscillatory check is two-dimensional"));
    }
    if !(0.5..=1.5).contains(&p) {
        return Err(Error::invalid(format!("p = {p} must lie in [1/2, 3/2]")));
    }
    if !(r1 >= 1.0 && r2 >= 1.0) {
        return Err(Error::invalid("annulus radii must be at least 1"));
    }
    let reach = 2.0 * r1.max(r2);
    if grid.half_width < reach {
        return Err(Error::invalid(format!(
            "box half-width {} does not contain the annulus of radius {reach}",
            grid.half_width
        )));
    }
    let trunc = TruncationSpec::new(1.0, delta, vec![0.0, 1.0])?;
    let kernel = assemble_scalar(
        grid,
        1,
        Some(Branch::Plus),
        "oscillatory",
        |u| {
            let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let theta = split_theta(r);
            if theta == 0.0 {
                return ZERO;
            }
            let omega = [u[0] / r, u[1] / r];
            let phi = trunc.weight(&omega);
            if phi == 0.0 {
                return ZERO;
            }
            // e^{ir} r^{-p} a(r) with e^{ir} r^{-1/2} a(r) = theta(r) (i/4) H_0(r).
            theta * 0.25 * I * hankel1_0(r) * r.powf(0.5 - p) * phi
        },
        ZERO,
    )?;
    let radius: Vec<f64> = (0..grid.num_points()).map(|q| grid.radius(q)).collect();
    let left = ScalarMultiplier::new(1, radius.iter().map(|r| annulus_cutoff(r / r1)).collect());
    let right = ScalarMultiplier::new(1, radius.iter().map(|r| annulus_cutoff(r / r2)).collect());
    let t = Product::new(vec![&left, &kernel, &right]);
    operator_norm(&t)
}

pub fn oscillatory_norm_check(delta: f64, p: f64, r1: f64, r2: f64, grid: &Grid) -> Result<OscillatoryCheck> {
    let constant = oscillatory_operator_norm(0.5, 0.5, 1.0, 1.0, grid)?;
    let measured = oscillatory_operator_norm(delta, p, r1, r2, grid)?;
    Ok(OscillatoryCheck {
        delta,
        p,
        r1,
        r2,
        measured,
        bound: constant * delta.powf(p - 0.5) * (r1 * r2).sqrt(),
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::resolvent::schrodinger_operator;

    #[test]
    fn exponent_fit_recovers_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.25)).collect();
        assert!((fit_exponent(&xs, &ys).unwrap() + 1.25).abs() < 1e-12);
        assert!(fit_exponent(&[1.0], &[1.0]).is_err());
        assert!(fit_exponent(&[1.0, 2.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn truncated_scaling_relation() {
        // R_{d,delta}(lambda^2)(x, y) = lambda^{n-2} R_{d lambda, delta}(1)(lambda x, lambda y) in 2D.
        let trunc = TruncationSpec::new(0.8, 0.5, vec![0.0, 1.0]).unwrap();
        let wide = TruncationSpec::new(0.8 * 3.0, 0.5, vec![0.0, 1.0]).unwrap();
        for u in [[0.1, 0.9], [-0.2, 1.4], [0.3, 2.0]] {
            let a = truncated_scalar(2, 3.0, &u, Branch::Plus, trunc.d, &trunc).0;
            let b = truncated_scalar(2, 1.0, &[3.0 * u[0], 3.0 * u[1]], Branch::Plus, wide.d, &wide).0;
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn short_range_saturates_to_full_resolvent() {
        let grid = Grid::new(2, 2.0, 16, false).unwrap();
        let full = schrodinger_operator(&grid, 1, 1.5, Branch::Plus).unwrap();
        // d/2 beyond the box diagonal: the cutoff never switches on.
        let short = short_range_resolvent(1.5, 20.0, 0, &grid).unwrap();
        let diff = short.combine(C64::new(1.0, 0.0), &full, C64::new(-1.0, 0.0), "diff").unwrap();
        assert_eq!(diff.max_abs(), 0.0);
        let a = operator_norm(&short).unwrap();
        let b = operator_norm(&full).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn oscillatory_kernel_vanishes_inside_half() {
        // Annuli at radius ~1 never see separations below 1/2 only if the cutoff kills them:
        // the far-part amplitude itself is zero for r < 1/2.
        assert_eq!(split_theta(0.49), 0.0);
        let grid = Grid::new(2, 4.0, 32, false).unwrap();
        let c = oscillatory_norm_check(0.5, 0.5, 1.0, 1.0, &grid).unwrap();
        assert!((c.measured - c.constant).abs() <= 1e-9 * c.constant);
        assert!((c.bound - c.constant).abs() <= 1e-12 * c.constant);
        assert!(oscillatory_norm_check(0.5, 2.0, 1.0, 1.0, &grid).is_err());
        assert!(oscillatory_norm_check(0.5, 1.0, 3.0, 1.0, &grid).is_err());
    }

    #[test]
    fn short_range_rates_in_both_regimes() {
        // With d lambda held fixed the norm is lambda^{-2+|alpha|} times a constant; with
        // d lambda >> 1 the <d lambda> factor lifts both rates by one power.
        let grid = Grid::new(2, 4.0, 64, false).unwrap();
        let ls = [1.0, 2.0, 4.0];
        for order in [0u8, 1] {
            let scaled: Vec<f64> = ls
                .iter()
                .map(|l| operator_norm(&short_range_resolvent(*l, 1.0 / l, order, &grid).unwrap()).unwrap())
                .collect();
            let slope = fit_exponent(&ls, &scaled).unwrap();
            assert!((slope - (-2.0 + order as f64)).abs() <= 0.3, "order {order}: {scaled:?}");
        }
        let wide = short_range_check(4.0, &[2.0, 4.0, 6.0], &grid).unwrap();
        assert!((wide.order0.exponent + 1.0).abs() <= 0.3, "{:?}", wide.order0);
        assert!(wide.order1.exponent.abs() <= 0.3, "{:?}", wide.order1);
    }

    #[test]
    fn resolution_is_enforced() {
        let grid = Grid::new(2, 4.0, 16, false).unwrap();
        assert!(dir_res_scaling_check(0.5, 0.5, 0, &[1.0, 8.0], &grid).is_err());
        assert!(short_range_check(0.5, &[0.5, 1.0], &grid).is_err());
    }
}
