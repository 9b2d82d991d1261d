//! Closed-form free resolvent kernels in two and three dimensions.
//!
//! `R_0(z^2) = (-Delta - z^2)^{-1}` has kernel `g(|x - y|)` with
//!
//! * `n = 3`: `g(r) = e^{izr} / (4 pi r)`
//! * `n = 2`: `g(r) = (i/4) H_0^(1)(z r)`
//!
//! on the outgoing branch. The incoming branch is the complex conjugate.
//! The Dirac resolvent `(D_m - lambda)^{-1}` is `(D_m + lambda) R_0(lambda^2 - m^2)`,
//! and its kernel is assembled from `g` and its radial derivative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clifford::{DiracMatrices, SpinMatrix};
use crate::special::hankel1_01;
use crate::{Error, Result, C64, EULER_GAMMA, I, ZERO};

/// Which boundary value of the resolvent on the spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Outgoing, `lambda + i0`.
    Plus,
    /// Incoming, `lambda - i0`.
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    /// Map an outgoing-branch value to this branch.
    #[inline]
    pub fn orient(self, outgoing: C64) -> C64 {
        match self {
            Branch::Plus => outgoing,
            Branch::Minus => outgoing.conj(),
        }
    }

    /// Branch of `R_0(lambda^2 - m^2)` that enters `(D_m - (lambda +- i0))^{-1}`.
    ///
    /// Squaring `lambda + i0` with `lambda < 0` lands below the real axis, so the
    /// Schrodinger branch flips on the negative half-line.
    pub fn for_energy(self, lambda: f64) -> Branch {
        if lambda < 0.0 {
            self.flipped()
        } else {
            self
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        })
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "outgoing" => Ok(Branch::Plus),
            "minus" | "-" | "incoming" => Ok(Branch::Minus),
            other => Err(Error::invalid(format!("unknown branch {other:?}"))),
        }
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "resolvent kernels are implemented for n = 2, 3 only (got {n})"
        )))
    }
}

/// Outgoing `g(r)` and `g'(r)` without argument checks.
#[inline]
pub(crate) fn radial_kernel(n: usize, z: f64, r: f64) -> (C64, C64) {
    if n == 3 {
        let g = C64::from_polar(1.0 / (4.0 * PI * r), z * r);
        (g, C64::new(-1.0 / r, z) * g)
    } else {
        let (h0, h1) = hankel1_01(z * r);
        (0.25 * I * h0, -0.25 * I * z * h1)
    }
}

/// Free Schrodinger resolvent kernel `g(r)` on the given branch.
pub fn schrodinger_kernel(n: usize, z: f64, r: f64, branch: Branch) -> Result<C64> {
    check_dimension(n)?;
    if !(z > 0.0) || !(r > 0.0) {
        return Err(Error::invalid(format!(
            "kernel needs z > 0 and r > 0 (got z = {z}, r = {r})"
        )));
    }
    Ok(branch.orient(radial_kernel(n, z, r).0))
}

/// Radial derivative `g'(r)` on the given branch.
pub fn schrodinger_kernel_derivative(n: usize, z: f64, r: f64, branch: Branch) -> Result<C64> {
    check_dimension(n)?;
    if !(z > 0.0) || !(r > 0.0) {
        return Err(Error::invalid(format!(
            "kernel needs z > 0 and r > 0 (got z = {z}, r = {r})"
        )));
    }
    Ok(branch.orient(radial_kernel(n, z, r).1))
}

/// Leading small-`r` behaviour of the two-dimensional kernel at `z = 1`:
/// `-(1/2pi)(log(r/2) + gamma) + i/4`.
pub fn log_leading_term(r: f64) -> C64 {
    C64::new(-((0.5 * r).ln() + EULER_GAMMA) / (2.0 * PI), 0.25)
}

/// Quintic smoothstep: 0 for `t <= 0`, 1 for `t >= 1`, `C^2` in between.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

#[inline]
pub fn smoothstep_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Splitting of the scaled kernel into an oscillatory far part and a local part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSplit {
    /// `theta(z r) g(r)`, vanishes for `z r < cutoff_lo`.
    pub osc: C64,
    /// `(1 - theta(z r)) g(r)`, vanishes for `z r > cutoff_hi`.
    pub loc: C64,
    pub cutoff_lo: f64,
    pub cutoff_hi: f64,
}

pub const SPLIT_LO: f64 = 0.5;
pub const SPLIT_HI: f64 = 0.75;

/// The transition function of the split, evaluated at the scaled radius `s = z r`.
#[inline]
pub fn split_theta(s: f64) -> f64 {
    smoothstep((s - SPLIT_LO) / (SPLIT_HI - SPLIT_LO))
}

/// Split `g(r) = osc + loc` using the transition at scaled radius `z r`.
pub fn kernel_split(n: usize, z: f64, r: f64, branch: Branch) -> Result<KernelSplit> {
    let full = schrodinger_kernel(n, z, r, branch)?;
    let theta = split_theta(z * r);
    Ok(KernelSplit {
        osc: theta * full,
        loc: (1.0 - theta) * full,
        cutoff_lo: SPLIT_LO,
        cutoff_hi: SPLIT_HI,
    })
}

fn displacement_radius(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dirac resolvent kernel `(-i alpha . grad_x + m beta + lambda) g(x - y)`.
pub fn dirac_kernel(
    mats: &DiracMatrices,
    m: f64,
    lambda: f64,
    x_minus_y: &[f64],
    branch: Branch,
) -> Result<SpinMatrix> {
    let n = mats.dimension();
    check_dimension(n)?;
    if x_minus_y.len() != n {
        return Err(Error::invalid("displacement length differs from dimension"));
    }
    if !(lambda.abs() > m) || m < 0.0 {
        return Err(Error::invalid(format!(
            "Dirac kernel needs |lambda| > m >= 0 (got lambda = {lambda}, m = {m})"
        )));
    }
    let r = displacement_radius(x_minus_y);
    if !(r > 0.0) {
        return Err(Error::invalid("zero displacement"));
    }
    let z = (lambda * lambda - m * m).sqrt();
    let schrodinger = branch.for_energy(lambda);
    let (g, dg) = radial_kernel(n, z, r);
    let (g, dg) = (schrodinger.orient(g), schrodinger.orient(dg));
    let mut grad = [ZERO; 3];
    for (k, slot) in grad.iter_mut().take(n).enumerate() {
        *slot = dg * (x_minus_y[k] / r);
    }
    Ok(dirac_from_scalar(mats, m, lambda, g, &grad[..n]))
}

/// `-i alpha . grad + (m beta + lambda) value` for a scalar kernel with known gradient.
pub fn dirac_from_scalar(
    mats: &DiracMatrices,
    m: f64,
    lambda: f64,
    value: C64,
    grad: &[C64],
) -> SpinMatrix {
    let s = mats.spinor_dim();
    let mut out = SpinMatrix::zeros(s);
    for (alpha, &gk) in mats.alphas().iter().zip(grad) {
        let c = -I * gk;
        if c == ZERO {
            continue;
        }
        for i in 0..s {
            for j in 0..s {
                out[(i, j)] += c * alpha[(i, j)];
            }
        }
    }
    let beta = mats.beta();
    for i in 0..s {
        for j in 0..s {
            out[(i, j)] += m * value * beta[(i, j)];
        }
        out[(i, i)] += lambda * value;
    }
    out
}

/// Angular factor of a directional truncation.
pub trait AngularWeight: Sync {
    /// Value at the unit vector `omega`.
    fn weight(&self, omega: &[f64]) -> f64;
    /// Gradient on the sphere at `omega`, written into `out` (tangent to the sphere).
    fn tangential_gradient(&self, omega: &[f64], out: &mut [f64]);
}

/// Range and angle cutoffs `eta_d(|x - y|) Phi_delta((x - y)/|x - y|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub d: f64,
    pub delta: f64,
    pub phi_center: Vec<f64>,
}

impl TruncationSpec {
    pub fn new(d: f64, delta: f64, phi_center: Vec<f64>) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::invalid("truncation range d must be positive"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("angular width delta must lie in (0, 1)"));
        }
        let norm = displacement_radius(&phi_center);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cap center must be a nonzero vector"));
        }
        let phi_center = phi_center.into_iter().map(|c| c / norm).collect();
        Ok(Self {
            d,
            delta,
            phi_center,
        })
    }
}

/// Range cutoff: 0 for `r <= d/2`, 1 for `r >= d`.
#[inline]
pub fn range_cutoff(d: f64, r: f64) -> f64 {
    smoothstep((2.0 * r - d) / d)
}

#[inline]
pub fn range_cutoff_derivative(d: f64, r: f64) -> f64 {
    2.0 / d * smoothstep_derivative((2.0 * r - d) / d)
}

/// Bump in the geodesic angle from a center: 1 up to `inner`, 0 from `outer` on.
pub(crate) fn angular_bump(center: &[f64], inner: f64, outer: f64, omega: &[f64]) -> f64 {
    let c: f64 = center.iter().zip(omega).map(|(a, b)| a * b).sum();
    let angle = c.clamp(-1.0, 1.0).acos();
    1.0 - smoothstep((angle - inner) / (outer - inner))
}

pub(crate) fn angular_bump_gradient(
    center: &[f64],
    inner: f64,
    outer: f64,
    omega: &[f64],
    out: &mut [f64],
) {
    let c: f64 = center.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
    let angle = c.acos();
    let sin = (1.0 - c * c).sqrt();
    let slope = -smoothstep_derivative((angle - inner) / (outer - inner)) / (outer - inner);
    if slope == 0.0 || sin < 1e-14 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // d angle / d omega along the sphere is -(center - c omega) / sin.
    for k in 0..out.len() {
        out[k] = -slope * (center[k] - c * omega[k]) / sin;
    }
}

impl AngularWeight for TruncationSpec {
    fn weight(&self, omega: &[f64]) -> f64 {
        angular_bump(&self.phi_center, 0.5 * self.delta, self.delta, omega)
    }

    fn tangential_gradient(&self, omega: &[f64], out: &mut [f64]) {
        angular_bump_gradient(&self.phi_center, 0.5 * self.delta, self.delta, omega, out)
    }
}

/// Value and gradient of `eta_d(r) Phi(omega) g(r)` at displacement `u != 0`.
pub fn truncated_scalar<W: AngularWeight + ?Sized>(
    n: usize,
    z: f64,
    u: &[f64],
    branch: Branch,
    d: f64,
    angular: &W,
) -> (C64, [C64; 3]) {
    let r = displacement_radius(u);
    let mut omega = [0.0; 3];
    for k in 0..n {
        omega[k] = u[k] / r;
    }
    let eta = range_cutoff(d, r);
    let phi = angular.weight(&omega[..n]);
    let mut tangent = [0.0; 3];
    angular.tangential_gradient(&omega[..n], &mut tangent[..n]);
    if eta == 0.0 || (phi == 0.0 && tangent.iter().all(|v| *v == 0.0)) {
        return (ZERO, [ZERO; 3]);
    }
    let (g, dg) = radial_kernel(n, z, r);
    let (g, dg) = (branch.orient(g), branch.orient(dg));
    let deta = range_cutoff_derivative(d, r);
    let radial = (deta * g + eta * dg) * phi;
    let mut grad = [ZERO; 3];
    for k in 0..n {
        grad[k] = radial * omega[k] + eta * g * (tangent[k] / r);
    }
    (eta * phi * g, grad)
}

/// Truncated Schrodinger kernel `eta_d(|u|) Phi_delta(u/|u|) g(|u|)`.
pub fn truncated_kernel(
    n: usize,
    z: f64,
    x_minus_y: &[f64],
    branch: Branch,
    trunc: &TruncationSpec,
) -> Result<C64> {
    check_dimension(n)?;
    if x_minus_y.len() != n || trunc.phi_center.len() != n {
        return Err(Error::invalid("vector lengths differ from dimension"));
    }
    let r = displacement_radius(x_minus_y);
    if !(z > 0.0) || !(r > 0.0) {
        return Err(Error::invalid("kernel needs z > 0 and a nonzero displacement"));
    }
    Ok(truncated_scalar(n, z, x_minus_y, branch, trunc.d, trunc).0)
}

/// Short-range piece `(1 - eta_d(r)) g(r)` and its radial derivative.
pub fn short_range_scalar(n: usize, z: f64, r: f64, branch: Branch, d: f64) -> (C64, C64) {
    let (g, dg) = radial_kernel(n, z, r);
    let (g, dg) = (branch.orient(g), branch.orient(dg));
    let eta = range_cutoff(d, r);
    let deta = range_cutoff_derivative(d, r);
    ((1.0 - eta) * g, (1.0 - eta) * dg - deta * g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_value() {
        let g = schrodinger_kernel(3, 1.0, 1.0, Branch::Plus).unwrap();
        assert!((g.re - 0.042_995_891_371_431_8).abs() < 1e-12, "{g}");
        assert!((g.im - 0.066_962_133_350_290_9).abs() < 1e-12, "{g}");
    }

    #[test]
    fn branches_are_conjugate() {
        for n in [2, 3] {
            let p = schrodinger_kernel(n, 1.7, 0.4, Branch::Plus).unwrap();
            let m = schrodinger_kernel(n, 1.7, 0.4, Branch::Minus).unwrap();
            assert_eq!(p.conj(), m);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(schrodinger_kernel(2, 1.0, 0.0, Branch::Plus).is_err());
        assert!(schrodinger_kernel(3, -1.0, 1.0, Branch::Plus).is_err());
        assert!(schrodinger_kernel(4, 1.0, 1.0, Branch::Plus).is_err());
        let mats = DiracMatrices::new(2).unwrap();
        assert!(dirac_kernel(&mats, 1.0, 0.5, &[1.0, 0.0], Branch::Plus).is_err());
        assert!(dirac_kernel(&mats, 0.0, 1.0, &[0.0, 0.0], Branch::Plus).is_err());
    }

    #[test]
    fn split_supports() {
        let s = kernel_split(2, 1.0, 0.3, Branch::Plus).unwrap();
        assert_eq!(s.osc, ZERO);
        let s = kernel_split(3, 1.0, 1.0, Branch::Plus).unwrap();
        assert_eq!(s.loc, ZERO);
        let s = kernel_split(2, 1.0, 0.6, Branch::Plus).unwrap();
        let full = schrodinger_kernel(2, 1.0, 0.6, Branch::Plus).unwrap();
        assert!((s.osc + s.loc - full).norm() < 1e-12);
    }

    #[test]
    fn massless_kernel_has_no_beta_part() {
        let mats = DiracMatrices::new(3).unwrap();
        let u = [0.3, -0.2, 0.5];
        let k = dirac_kernel(&mats, 0.0, 2.0, &u, Branch::Plus).unwrap();
        let r = displacement_radius(&u);
        let (g, dg) = radial_kernel(3, 2.0, r);
        let grad: Vec<C64> = u.iter().map(|c| dg * (c / r)).collect();
        let expect = dirac_from_scalar(&mats, 0.0, 2.0, g, &grad);
        assert!((&k - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn negative_energy_flips_schrodinger_branch() {
        let mats = DiracMatrices::new(2).unwrap();
        let u = [0.7, 0.1];
        let k = dirac_kernel(&mats, 1.0, -2.0, &u, Branch::Plus).unwrap();
        let z = 3f64.sqrt();
        let r = displacement_radius(&u);
        let (g, dg) = radial_kernel(2, z, r);
        let grad: Vec<C64> = u.iter().map(|c| dg.conj() * (c / r)).collect();
        let expect = dirac_from_scalar(&mats, 1.0, -2.0, g.conj(), &grad);
        assert!((&k - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn truncation_vanishes_where_expected() {
        let t = TruncationSpec::new(2.0, 0.5, vec![1.0, 0.0]).unwrap();
        assert_eq!(truncated_kernel(2, 1.0, &[0.5, 0.0], Branch::Plus, &t).unwrap(), ZERO);
        assert_eq!(truncated_kernel(2, 1.0, &[-5.0, 0.0], Branch::Plus, &t).unwrap(), ZERO);
        let inside = truncated_kernel(2, 1.0, &[5.0, 0.0], Branch::Plus, &t).unwrap();
        let full = schrodinger_kernel(2, 1.0, 5.0, Branch::Plus).unwrap();
        assert!((inside - full).norm() < 1e-15);
    }

    #[test]
    fn truncated_gradient_matches_differences() {
        let t = TruncationSpec::new(1.0, 0.8, vec![1.0, 1.0, 0.0]).unwrap();
        let u = [0.6, 0.4, 0.05];
        let (_, grad) = truncated_scalar(3, 2.0, &u, Branch::Plus, t.d, &t);
        let h = 1e-6;
        for k in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[k] += h;
            dn[k] -= h;
            let fd = (truncated_scalar(3, 2.0, &up, Branch::Plus, t.d, &t).0
                - truncated_scalar(3, 2.0, &dn, Branch::Plus, t.d, &t).0)
                / (2.0 * h);
            assert!((fd - grad[k]).norm() < 1e-6 * (1.0 + fd.norm()), "{k}: {fd} {}", grad[k]);
        }
    }
}
