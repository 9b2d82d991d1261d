//! Perturbed resolvents, limiting absorption sweeps and the threshold suite.
//!
//! The perturbed resolvent is obtained by Birman-Schwinger inversion,
//! `R_V(lambda) = R_0(lambda) (I + V R_0(lambda))^{-1}`, with `R_0` the
//! assembled free Dirac resolvent on the requested branch. A complex
//! spectral parameter `lambda + i gamma` is absorbed into the potential:
//! `R_V(lambda + i gamma) = R_0^+(lambda) (I + (V - i gamma) R_0^+(lambda))^{-1}`.

use std::f64::consts::PI;
use std::sync::Mutex;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::DiracMatrices;
use crate::fields::norms::{b_to_bstar_norm, weighted_operator_norm};
use crate::fields::operator::{BlockDiagonal, LinearOperator, Product, ScalarMultiplier};
use crate::fields::resolvent::{
    ball_integral, dirac_operator, equal_volume_radius, static_ball_integral,
};
use crate::fields::{assemble_operator, Grid, KernelOperator};
use crate::kernels::{dirac_from_scalar, Branch};
use crate::linalg::{self, gmres, gmres_adjoint, power_norm, DenseLu};
use crate::special::hankel1_01;
use crate::{Error, Result, C64, I, ONE, ZERO};

/// Largest dimension solved by dense LU; larger systems use GMRES.
pub const DENSE_SOLVE_LIMIT: usize = 3000;
/// Condition estimate above which the solve is reported as near-singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
/// Condition estimate above which one step of iterative refinement is applied.
pub const REFINE_CONDITION: f64 = 1e8;
/// Singular-value tolerance that separates regular from resonant thresholds.
pub const REGULAR_TOL: f64 = 1e-6;
/// Level below which a coupling sweep counts a singular-value crossing.
pub const CROSSING_LEVEL: f64 = 1e-3;

const GMRES_TOL: f64 = 1e-12;
const GMRES_RESTART: usize = 80;
const GMRES_MAX_ITER: usize = 4000;

/// `I + V R_0`.
struct BirmanSchwinger<'a> {
    free: &'a KernelOperator,
    potential: &'a BlockDiagonal,
}

impl LinearOperator for BirmanSchwinger<'_> {
    fn dim(&self) -> usize {
        self.free.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let r = self.free.apply_vec(x);
        self.potential.apply(&r, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += xi;
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let v = self.potential.apply_adjoint_vec(x);
        self.free.apply_adjoint(&v, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += xi;
        }
    }
}

enum Solver {
    Identity,
    Dense { lu: DenseLu, matrix: Mat<C64> },
    Iterative,
}

/// `R_V(lambda)` as an operator; applications solve the Birman-Schwinger system.
pub struct PerturbedResolvent {
    pub lambda: C64,
    pub branch: Branch,
    /// Estimate of the condition number of `I + V R_0`.
    pub condition: f64,
    free: KernelOperator,
    potential: BlockDiagonal,
    solver: Solver,
    /// Worst relative residual of a failed iterative solve, if any.
    failure: Mutex<Option<f64>>,
}

impl PerturbedResolvent {
    pub fn free(&self) -> &KernelOperator {
        &self.free
    }

    /// Dense matrix of `R_V`, subject to the memory cap.
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        let m = linalg::to_dense(self)?;
        self.check()?;
        Ok(m)
    }

    /// Error out if any iterative solve since construction failed.
    pub fn check(&self) -> Result<()> {
        match *self.failure.lock().expect("poisoned solver flag") {
            Some(residual) => Err(Error::NonConvergence {
                iterations: GMRES_MAX_ITER,
                estimate: f64::NAN,
                residual,
            }),
            None => Ok(()),
        }
    }

    fn record_failure(&self, residual: f64) {
        let mut slot = self.failure.lock().expect("poisoned solver flag");
        *slot = Some(slot.map_or(residual, |r| r.max(residual)));
    }

    fn bs(&self) -> BirmanSchwinger<'_> {
        BirmanSchwinger {
            free: &self.free,
            potential: &self.potential,
        }
    }

    /// `(I + V R_0)^{-1} x`.
    fn solve(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        match &self.solver {
            Solver::Identity => x.to_vec(),
            Solver::Dense { lu, matrix } => {
                let mut u = if adjoint { lu.solve_adjoint(x) } else { lu.solve(x) };
                if self.condition > REFINE_CONDITION {
                    let r = residual(matrix, &u, x, adjoint);
                    let du = if adjoint { lu.solve_adjoint(&r) } else { lu.solve(&r) };
                    linalg::axpy(ONE, &du, &mut u);
                }
                u
            }
            Solver::Iterative => {
                let bs = self.bs();
                let out = if adjoint {
                    gmres_adjoint(&bs, x, GMRES_TOL, GMRES_RESTART, GMRES_MAX_ITER)
                } else {
                    gmres(&bs, x, GMRES_TOL, GMRES_RESTART, GMRES_MAX_ITER)
                };
                match out {
                    Ok((u, _)) => u,
                    Err(Error::NonConvergence { residual, .. }) => {
                        self.record_failure(residual);
                        vec![C64::new(f64::NAN, f64::NAN); x.len()]
                    }
                    Err(_) => {
                        self.record_failure(f64::NAN);
                        vec![C64::new(f64::NAN, f64::NAN); x.len()]
                    }
                }
            }
        }
    }
}

fn residual(m: &Mat<C64>, u: &[C64], b: &[C64], adjoint: bool) -> Vec<C64> {
    let d = m.nrows();
    (0..d)
        .map(|i| {
            let mut acc = b[i];
            for j in 0..d {
                let a = if adjoint { m[(j, i)].conj() } else { m[(i, j)] };
                acc -= a * u[j];
            }
            acc
        })
        .collect()
}

impl LinearOperator for PerturbedResolvent {
    fn dim(&self) -> usize {
        self.free.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let u = self.solve(x, false);
        self.free.apply(&u, y);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let t = self.free.apply_adjoint_vec(x);
        y.copy_from_slice(&self.solve(&t, true));
    }
}

/// Rough condition estimate of a square operator from forward and inverse power iterations.
fn condition_estimate(
    op: &dyn LinearOperator,
    inverse: &dyn LinearOperator,
) -> Result<f64> {
    let fwd = power_norm(op, None, 1e-3, 200)
        .map(|e| e.value)
        .or_else(|e| match e {
            Error::NonConvergence { estimate, .. } => Ok(estimate),
            other => Err(other),
        })?;
    let inv = power_norm(inverse, None, 1e-3, 200)
        .map(|e| e.value)
        .or_else(|e| match e {
            Error::NonConvergence { estimate, .. } => Ok(estimate),
            other => Err(other),
        })?;
    Ok(fwd * inv)
}

struct InverseView<'a>(&'a PerturbedResolvent);

impl LinearOperator for InverseView<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.0.solve(x, false));
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.0.solve(x, true));
    }
}

/// Perturbed Dirac resolvent at `lambda` (real part outside `[-m, m]`).
///
/// For `Im lambda != 0` the free resolvent is taken on the boundary value
/// matching the sign of `Im lambda`, and `-i Im lambda` is moved into the
/// potential; `branch` is then ignored.
pub fn perturbed_resolvent(
    lambda: C64,
    branch: Branch,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
) -> Result<PerturbedResolvent> {
    if !(lambda.re.abs() > m) {
        return Err(Error::invalid(format!(
            "perturbed resolvent needs |Re lambda| > m (Re lambda = {}, m = {m}); \
             spectral-gap parameters are not supported",
            lambda.re
        )));
    }
    if potential.hermitian_defect() > 1e-12 {
        return Err(Error::NotHermitian(potential.hermitian_defect()));
    }
    let branch = if lambda.im > 0.0 {
        Branch::Plus
    } else if lambda.im < 0.0 {
        Branch::Minus
    } else {
        branch
    };
    let free = dirac_operator(grid, mats, m, lambda.re, branch)?;
    let shifted = if lambda.im != 0.0 {
        potential.shifted(-I * lambda.im)
    } else {
        potential.clone()
    };
    if shifted.points() != grid.num_points() || shifted.spinor_dim != mats.spinor_dim() {
        return Err(Error::invalid("potential was sampled on a different grid"));
    }
    let trivial = shifted.blocks.iter().all(|z| *z == ZERO);
    let dim = free.dim();
    let mut out = PerturbedResolvent {
        lambda,
        branch,
        condition: 1.0,
        free,
        potential: shifted,
        solver: Solver::Identity,
        failure: Mutex::new(None),
    };
    if trivial {
        return Ok(out);
    }
    if dim <= DENSE_SOLVE_LIMIT {
        let mut b = out.free.to_dense()?;
        apply_block_rows(&out.potential, &mut b);
        for i in 0..dim {
            b[(i, i)] += ONE;
        }
        let lu = DenseLu::new(&b)?;
        out.solver = Solver::Dense { lu, matrix: b };
    } else {
        out.solver = Solver::Iterative;
    }
    let cond = condition_estimate(&out.bs(), &InverseView(&out))?;
    out.check()?;
    out.condition = cond;
    if !(cond < SINGULAR_CONDITION) {
        return Err(Error::NearSingular {
            lambda_re: lambda.re,
            lambda_im: lambda.im,
            condition: cond,
        });
    }
    Ok(out)
}

/// `M <- V M` for a block-diagonal `V`.
fn apply_block_rows(v: &BlockDiagonal, m: &mut Mat<C64>) {
    let s = v.spinor_dim;
    let cols = m.ncols();
    let mut tmp = vec![ZERO; s];
    for p in 0..v.points() {
        let b = v.block(p);
        for c in 0..cols {
            for i in 0..s {
                let mut acc = ZERO;
                for j in 0..s {
                    acc += b[i * s + j] * m[(p * s + j, c)];
                }
                tmp[i] = acc;
            }
            for i in 0..s {
                m[(p * s + i, c)] = tmp[i];
            }
        }
    }
}

/// One row of a limiting absorption sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapEntry {
    pub lambda: f64,
    pub gamma: f64,
    /// `| <x>^{-sigma} R_V <x>^{-sigma} |`; NaN when the solve failed.
    pub norm_weighted: f64,
    pub norm_b_bstar: Option<f64>,
    pub cond: f64,
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapReport {
    pub sigma: f64,
    pub branch: Branch,
    pub entries: Vec<LapEntry>,
    /// Maximum of the finite weighted norms.
    pub sup_norm: f64,
    #[serde(default)]
    pub config_echo: serde_json::Value,
}

impl LapReport {
    fn new(sigma: f64, branch: Branch, entries: Vec<LapEntry>) -> Self {
        let sup_norm = entries
            .iter()
            .map(|e| e.norm_weighted)
            .filter(|v| v.is_finite())
            .fold(f64::NAN, f64::max);
        Self {
            sigma,
            branch,
            entries,
            sup_norm,
            config_echo: serde_json::Value::Null,
        }
    }

    pub fn norms(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.norm_weighted).collect()
    }
}

fn measure(
    lambda: C64,
    branch: Branch,
    sigma: f64,
    with_b_norm: bool,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
) -> LapEntry {
    let mut entry = LapEntry {
        lambda: lambda.re,
        gamma: lambda.im,
        norm_weighted: f64::NAN,
        norm_b_bstar: None,
        cond: f64::NAN,
        flag: None,
    };
    let result = (|| -> Result<()> {
        let r = perturbed_resolvent(lambda, branch, potential, mats, m, grid)?;
        entry.cond = r.condition;
        entry.norm_weighted = weighted_operator_norm(&r, grid, sigma)?.value;
        if with_b_norm {
            entry.norm_b_bstar = Some(b_to_bstar_norm(&r, grid)?.hi);
        }
        r.check()
    })();
    if let Err(e) = result {
        entry.flag = Some(e.to_string());
        entry.norm_weighted = f64::NAN;
    }
    entry
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.5) {
        return Err(Error::invalid(format!(
            "sigma = {sigma}: weighted limiting absorption needs sigma > 1/2"
        )));
    }
    Ok(())
}

/// `|(D_m + V - lambda) R_V(lambda) f - f|_2 / |f|_2` with `D_m` taken by finite differences.
///
/// The integral operator and the stencil discretize the same equation
/// independently, so the residual measures the joint discretization error.
pub fn resolvent_residual(resolvent: &PerturbedResolvent, mats: &DiracMatrices, m: f64, grid: &Grid, f: &[C64]) -> Result<f64> {
    if resolvent.lambda.im != 0.0 {
        return Err(Error::invalid("the residual check is for real lambda"));
    }
    let u = resolvent.apply_vec(f);
    resolvent.check()?;
    let mut r = crate::fields::stencil::dirac_stencil(mats, m, grid, &u)?;
    let s = mats.spinor_dim();
    let lambda = resolvent.lambda.re;
    let mut vu = vec![ZERO; s];
    for p in 0..grid.num_points() {
        let block = resolvent.potential.block(p);
        for a in 0..s {
            vu[a] = (0..s).map(|b| block[a * s + b] * u[p * s + b]).sum();
        }
        for a in 0..s {
            r[p * s + a] += vu[a] - lambda * u[p * s + a] - f[p * s + a];
        }
    }
    let nf = linalg::norm2(f);
    if nf == 0.0 {
        return Ok(0.0);
    }
    Ok(linalg::norm2(&r) / nf)
}

/// Weighted norms of `R_V^{branch}(lambda)` over a grid of real energies.
///
/// Failures at individual energies are flagged and the sweep continues.
pub fn lap_sweep(
    lambdas: &[f64],
    sigma: f64,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    branch: Branch,
    with_b_norm: bool,
) -> Result<LapReport> {
    check_sigma(sigma)?;
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.abs() > m)) {
        return Err(Error::invalid(format!("lambda = {l} does not satisfy |lambda| > m = {m}")));
    }
    let entries = lambdas
        .par_iter()
        .map(|&l| {
            measure(C64::new(l, 0.0), branch, sigma, with_b_norm, potential, mats, m, grid)
        })
        .collect();
    Ok(LapReport::new(sigma, branch, entries))
}

/// Results of a sweep toward the real axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexSweep {
    pub report: LapReport,
    /// Weighted norm of the outgoing boundary value at `gamma = 0`.
    pub boundary_norm: f64,
    /// `| W (R_V(lambda + i gamma) - R_V^+(lambda)) W |` per `gamma`.
    pub differences: Vec<f64>,
    /// Unweighted `L^2 -> L^2` norms per `gamma`.
    pub l2_norms: Vec<f64>,
    /// `1 / (|gamma| - |V|_inf)` where `|gamma| > |V|_inf`.
    pub elementary_bounds: Vec<Option<f64>>,
}

/// Weighted norms of `R_V(lambda + i gamma)` over `gamma > 0` and the distance to the boundary value.
pub fn complex_sweep(
    lambda: f64,
    gammas: &[f64],
    sigma: f64,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
) -> Result<ComplexSweep> {
    check_sigma(sigma)?;
    if gammas.is_empty() {
        return Err(Error::invalid("gamma grid is empty"));
    }
    if gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::invalid("gamma values must be positive"));
    }
    if !(lambda.abs() > m) {
        return Err(Error::invalid(format!("lambda = {lambda} does not satisfy |lambda| > m = {m}")));
    }
    let vsup = potential.sup_norm();
    let boundary = perturbed_resolvent(C64::new(lambda, 0.0), Branch::Plus, potential, mats, m, grid)?;
    let boundary_norm = weighted_operator_norm(&boundary, grid, sigma)?.value;
    let s = mats.spinor_dim();
    let w = ScalarMultiplier::new(s, grid.weight(sigma));
    let rows: Vec<Result<(LapEntry, f64, f64)>> = gammas
        .par_iter()
        .map(|&g| {
            let r = perturbed_resolvent(C64::new(lambda, g), Branch::Plus, potential, mats, m, grid)?;
            let wrw = Product::new(vec![&w, &r, &w]);
            let norm = power_norm(&wrw, None, linalg::NORM_TOL, linalg::NORM_MAX_ITER)?.value;
            let diff_op = Difference(&r, &boundary);
            let wdw = Product::new(vec![&w, &diff_op, &w]);
            let diff = power_norm(&wdw, None, linalg::NORM_TOL, linalg::NORM_MAX_ITER)?.value;
            let l2 = linalg::operator_norm(&r)?;
            r.check()?;
            let entry = LapEntry {
                lambda,
                gamma: g,
                norm_weighted: norm,
                norm_b_bstar: None,
                cond: r.condition,
                flag: None,
            };
            Ok((entry, diff, l2))
        })
        .collect();
    let mut entries = Vec::new();
    let mut differences = Vec::new();
    let mut l2_norms = Vec::new();
    for row in rows {
        let (e, d, l) = row?;
        entries.push(e);
        differences.push(d);
        l2_norms.push(l);
    }
    boundary.check()?;
    let elementary_bounds = gammas
        .iter()
        .map(|g| (g.abs() > vsup).then(|| 1.0 / (g.abs() - vsup)))
        .collect();
    Ok(ComplexSweep {
        report: LapReport::new(sigma, Branch::Plus, entries),
        boundary_norm,
        differences,
        l2_norms,
        elementary_bounds,
    })
}

struct Difference<'a>(&'a dyn LinearOperator, &'a dyn LinearOperator);

impl LinearOperator for Difference<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
        let b = self.1.apply_vec(x);
        linalg::axpy(-ONE, &b, y);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply_adjoint(x, y);
        let b = self.1.apply_adjoint_vec(x);
        linalg::axpy(-ONE, &b, y);
    }
}

/// Per-energy `| W (R_V^+ - R_V^-) W |`, the resolvent form of Kato smoothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTable {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub sup: f64,
    /// Largest deviation of `i (R^+ - R^-)` from self-adjointness, relative.
    pub hermitian_defect: f64,
}

pub fn smoothing_resolvent_check(
    lambdas: &[f64],
    sigma: f64,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
) -> Result<SmoothingTable> {
    check_sigma(sigma)?;
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    let s = mats.spinor_dim();
    let w = ScalarMultiplier::new(s, grid.weight(sigma));
    let rows: Vec<Result<(f64, f64)>> = lambdas
        .par_iter()
        .map(|&l| {
            if !(l.abs() > m) {
                return Err(Error::invalid(format!("lambda = {l} lies in [-m, m]")));
            }
            let plus = perturbed_resolvent(C64::new(l, 0.0), Branch::Plus, potential, mats, m, grid)?;
            let minus = perturbed_resolvent(C64::new(l, 0.0), Branch::Minus, potential, mats, m, grid)?;
            let diff = Difference(&plus, &minus);
            let wdw = Product::new(vec![&w, &diff, &w]);
            let norm = power_norm(&wdw, None, linalg::NORM_TOL, linalg::NORM_MAX_ITER)?.value;
            // i (R^+ - R^-) should be self-adjoint: compare on a probe vector.
            let x = linalg::start_vector(diff.dim());
            let a = diff.apply_vec(&x);
            let b = diff.apply_adjoint_vec(&x);
            let defect: Vec<C64> = a.iter().zip(&b).map(|(p, q)| I * p - (-I) * q).collect();
            let defect = linalg::norm2(&defect) / linalg::norm2(&a).max(f64::MIN_POSITIVE);
            plus.check()?;
            minus.check()?;
            Ok((norm, defect))
        })
        .collect();
    let mut norms = Vec::new();
    let mut hermitian_defect: f64 = 0.0;
    for row in rows {
        let (n, d) = row?;
        norms.push(n);
        hermitian_defect = hermitian_defect.max(d);
    }
    let sup = norms.iter().cloned().fold(0.0, f64::max);
    Ok(SmoothingTable {
        lambdas: lambdas.to_vec(),
        norms,
        sup,
        hermitian_defect,
    })
}

fn check_threshold_case(n: usize, m: f64) -> Result<()> {
    match (n, m) {
        (3, m) if m >= 0.0 => Ok(()),
        (2, m) if m == 0.0 => Ok(()),
        (2, _) => Err(Error::invalid(
            "threshold operators for n = 2 are only available for m = 0",
        )),
        _ => Err(Error::invalid(format!("no threshold operator for n = {n}, m = {m}"))),
    }
}

/// Threshold operator `G = R_0^+(m)`.
///
/// * `n = 3`: `(D_m + m)` applied to `1/(4 pi |x - y|)`, kernel
///   `i alpha.(x-y)/(4 pi r^3) + m (beta + I)/(4 pi r)`.
/// * `n = 2`, `m = 0`: `-i alpha . grad` of `-(1/2 pi) log|x - y|`, kernel
///   `(i / 2 pi) alpha.(x-y)/r^2`.
pub fn threshold_operator(mats: &DiracMatrices, m: f64, grid: &Grid) -> Result<KernelOperator> {
    let n = grid.n;
    if mats.dimension() != n {
        return Err(Error::invalid("Clifford family and grid dimensions differ"));
    }
    check_threshold_case(n, m)?;
    let s = mats.spinor_dim();
    let rho = equal_volume_radius(grid);
    // (m beta + m) times the static cell integral; the odd part drops out.
    let diag = dirac_from_scalar(mats, m, m, C64::new(static_ball_integral(n, rho), 0.0), &[ZERO; 3][..n]);
    let diag = if n == 2 { crate::clifford::SpinMatrix::zeros(s) } else { diag };
    assemble_operator(
        grid,
        s,
        None,
        "threshold",
        |u| {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut grad = [ZERO; 3];
            if n == 3 {
                let g = 1.0 / (4.0 * PI * r);
                for k in 0..3 {
                    grad[k] = C64::new(-u[k] / (4.0 * PI * r * r * r), 0.0);
                }
                dirac_from_scalar(mats, m, m, C64::new(g, 0.0), &grad)
            } else {
                for k in 0..2 {
                    grad[k] = C64::new(-u[k] / (2.0 * PI * r * r), 0.0);
                }
                dirac_from_scalar(mats, 0.0, 0.0, ZERO, &grad[..2])
            }
        },
        &diag,
    )
}

/// `B_lambda = R_0^+(lambda) - G`, assembled from its own kernel to avoid cancellation.
pub fn blambda_operator(
    mats: &DiracMatrices,
    m: f64,
    lambda: f64,
    grid: &Grid,
) -> Result<KernelOperator> {
    let n = grid.n;
    check_threshold_case(n, m)?;
    if !(lambda > m) {
        return Err(Error::invalid("B_lambda needs lambda > m"));
    }
    let s = mats.spinor_dim();
    let z = (lambda * lambda - m * m).sqrt();
    let rho = equal_volume_radius(grid);
    let cell = ball_integral(n, z, rho, Branch::Plus);
    let static_cell = static_ball_integral(n, rho);
    let diag = if n == 3 {
        // (m beta + lambda) int g - (m beta + m) int g_0.
        &dirac_from_scalar(mats, m, lambda, cell, &[ZERO; 3])
            - &dirac_from_scalar(mats, m, m, C64::new(static_cell, 0.0), &[ZERO; 3])
    } else {
        dirac_from_scalar(mats, 0.0, lambda, cell, &[ZERO; 2])
    };
    assemble_operator(
        grid,
        s,
        Some(Branch::Plus),
        "b_lambda",
        |u| {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut grad = [ZERO; 3];
            if n == 3 {
                // e^{izr} - 1 without cancellation.
                let half = (0.5 * z * r).sin();
                let em1 = C64::new(-2.0 * half * half, (z * r).sin());
                let four_pi_r = 4.0 * PI * r;
                let g = C64::from_polar(1.0, z * r) / four_pi_r;
                let g0 = 1.0 / four_pi_r;
                // d/dr (g - g0) = [i z e^{izr} - (e^{izr} - 1)/r] / (4 pi r)
                let dgd = (I * z * C64::from_polar(1.0, z * r) - em1 / r) / four_pi_r;
                for k in 0..3 {
                    grad[k] = dgd * (u[k] / r);
                }
                // (m beta + lambda) g - (m beta + m) g0 = m beta (g - g0) + lambda g - m g0
                let mut out = dirac_from_scalar(mats, m, 0.0, em1 / four_pi_r, &grad);
                let scalar = lambda * g - m * g0;
                for a in 0..s {
                    out[(a, a)] += scalar;
                }
                out
            } else {
                let (h0, h1) = hankel1_01(z * r);
                let radial = -0.25 * I * z * h1 + 1.0 / (2.0 * PI * r);
                for k in 0..2 {
                    grad[k] = radial * (u[k] / r);
                }
                dirac_from_scalar(mats, 0.0, lambda, 0.25 * I * h0, &grad[..2])
            }
        },
        &diag,
    )
}

/// Result of the threshold regularity test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub m: f64,
    pub sigma: f64,
    /// Smallest singular value of `I + w G V w^{-1}`.
    pub smallest_singular_value: f64,
    pub regular: bool,
    /// Right singular vector for the smallest singular value when not regular.
    #[serde(skip)]
    pub resonance_profile: Option<Vec<C64>>,
    /// `(lambda, | w (R_0^+(lambda) - G) w |)`.
    pub blambda_decay: Vec<(f64, f64)>,
}

fn check_threshold_sigma(m: f64, sigma: f64) -> Result<()> {
    if m > 0.0 && !(sigma > 1.0) {
        return Err(Error::invalid(format!(
            "sigma = {sigma}: the massive threshold suite needs sigma > 1"
        )));
    }
    if !(sigma > 0.5) {
        return Err(Error::invalid(format!(
            "sigma = {sigma}: the threshold suite needs sigma > 1/2"
        )));
    }
    Ok(())
}

/// Dimension up to which singular values come from a dense SVD.
const DENSE_SVD_LIMIT: usize = 600;
const LANCZOS_STEPS: usize = 400;

/// Smallest singular value of `I + w G V w^{-1}` and its right singular vector.
pub fn threshold_singular_value(
    g: &KernelOperator,
    potential: &BlockDiagonal,
    sigma: f64,
    grid: &Grid,
) -> Result<(f64, Vec<C64>)> {
    let s = g.spinor_dim;
    let weight = grid.weight(sigma);
    let inv: Vec<f64> = weight.iter().map(|w| 1.0 / w).collect();
    // V w^{-1} and w are merged into block-diagonal factors.
    let ones = vec![1.0; weight.len()];
    let v_winv = potential.scaled_by(&ones, &inv);
    let w = ScalarMultiplier::new(s, weight);
    let core = Product::new(vec![&w, g, &v_winv]);
    let op = crate::fields::operator::Combination::new(core.dim(), ONE, vec![(ONE, &core)]);
    if potential.blocks.iter().all(|z| *z == ZERO) {
        return Ok((1.0, linalg::start_vector(op.dim())));
    }
    if op.dim() <= DENSE_SVD_LIMIT {
        let d = linalg::to_dense(&op)?;
        let svd = d
            .svd()
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let sv = svd.S();
        let mut idx = 0;
        for i in 0..d.nrows() {
            if sv[i].re < sv[idx].re {
                idx = i;
            }
        }
        let v = (0..d.nrows()).map(|i| svd.V()[(i, idx)]).collect();
        return Ok((sv[idx].re, v));
    }
    let pair = linalg::smallest_singular_value(&op, LANCZOS_STEPS)?;
    if !pair.converged {
        log::warn!(
            "Lanczos stopped after {} steps with residual {:.2e}; singular value {:.3e} is an upper estimate",
            pair.steps,
            pair.residual,
            pair.value
        );
    }
    Ok((pair.value, pair.vector))
}

/// Invertibility of `I + w G V w^{-1}` and the approach of `R_0^+(lambda)` to `G`.
pub fn regularity_check(
    potential: &BlockDiagonal,
    sigma: f64,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    lambda_offsets: &[f64],
) -> Result<ThresholdReport> {
    check_threshold_sigma(m, sigma)?;
    let g = threshold_operator(mats, m, grid)?;
    let (smin, vec) = threshold_singular_value(&g, potential, sigma, grid)?;
    let regular = smin > REGULAR_TOL;
    let mut blambda_decay = Vec::new();
    for &off in lambda_offsets {
        let lambda = m + off;
        let b = blambda_operator(mats, m, lambda, grid)?;
        let norm = weighted_operator_norm(&b, grid, sigma)?.value;
        blambda_decay.push((lambda, norm));
    }
    Ok(ThresholdReport {
        m,
        sigma,
        smallest_singular_value: smin,
        regular,
        resonance_profile: (!regular).then_some(vec),
        blambda_decay,
    })
}

/// Table and refined crossing of a coupling sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSweep {
    pub table: Vec<(f64, f64)>,
    /// Interval containing the coupling where the singular value dips below [`CROSSING_LEVEL`].
    pub bracket: Option<(f64, f64)>,
    pub s_star: Option<f64>,
    /// Smallest singular value seen in the refinement.
    pub min_value: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Smallest singular value of `I + w G (s V_1) w^{-1}` over a table of couplings `s`,
/// with the dip refined to relative width `1e-3`.
pub fn coupling_sweep(
    profile: &BlockDiagonal,
    s_grid: &[f64],
    sigma: f64,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
) -> Result<CouplingSweep> {
    check_threshold_sigma(m, sigma)?;
    if s_grid.len() < 2 {
        return Err(Error::invalid("coupling grid needs at least two values"));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("coupling grid must be strictly increasing"));
    }
    let g = threshold_operator(mats, m, grid)?;
    let scaled = |s: f64| {
        let mut v = profile.clone();
        v.blocks.iter_mut().for_each(|z| *z *= s);
        v
    };
    let eval = |s: f64| -> Result<f64> {
        Ok(threshold_singular_value(&g, &scaled(s), sigma, grid)?.0)
    };
    let mut table = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        table.push((s, eval(s)?));
    }
    let mut best = f64::INFINITY;
    let mut found: Option<(f64, f64)> = None;
    // Local minima of the table, deepest first.
    let mut minima: Vec<usize> = (0..table.len())
        .filter(|&i| {
            let left = i == 0 || table[i - 1].1 >= table[i].1;
            let right = i + 1 == table.len() || table[i + 1].1 >= table[i].1;
            left && right
        })
        .collect();
    minima.sort_by(|a, b| table[*a].1.total_cmp(&table[*b].1));
    for i in minima {
        let mut a = table[i.saturating_sub(1)].0;
        let mut b = table[(i + 1).min(table.len() - 1)].0;
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        best = best.min(table[i].1).min(fc).min(fd);
        while (b - a) > 1e-3 * 0.5 * (a + b).abs() {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = eval(d)?;
            }
            best = best.min(fc).min(fd);
        }
        if fc.min(fd) < CROSSING_LEVEL {
            found = Some((a, b));
            break;
        }
    }
    Ok(CouplingSweep {
        table,
        bracket: found,
        s_star: found.map(|(a, b)| 0.5 * (a + b)),
        min_value: best,
    })
}
