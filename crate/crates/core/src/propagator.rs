//! Spectral time evolution on periodic grids.
//!
//! `D_m` is diagonal in the discrete Fourier basis with symbol
//! `alpha . xi + m beta`; adding a sampled potential and diagonalizing the
//! dense Hermitian matrix gives `e^{-itH}` exactly on the grid. Mixed
//! space-time norms are then evaluated by quadrature.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::DiracMatrices;
use crate::fields::assemble::check_memcap;
use crate::fields::operator::{BlockDiagonal, FftNd};
use crate::fields::{Grid, SpinorField};
use crate::{Error, Result, C64, ZERO};

/// Relative Hermiticity defect above which a Hamiltonian is refused.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenpairs this far inside the gap count as bound states.
pub const GAP_TOL: f64 = 1e-6;
/// Participation ratio cutoff relative to the average over all eigenvectors.
pub const LOCALIZATION_CUTOFF: f64 = 0.1;
/// Minimum quadrature samples per period of the fastest grid oscillation.
pub const SAMPLES_PER_PERIOD: f64 = 32.0;

/// Dense `D_m + V` on a periodic grid with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct DiscreteHamiltonian {
    pub grid: Grid,
    pub m: f64,
    pub spinor_dim: usize,
    pub matrix: Mat<C64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: Mat<C64>,
    /// Bound-state surrogates, see [`continuous_projection`].
    pub point_spectrum_flags: Vec<bool>,
    /// Messages about borderline classifications.
    pub warnings: Vec<String>,
}

/// Angular frequencies of a periodic axis, in FFT order.
pub fn axis_frequencies(grid: &Grid) -> Vec<f64> {
    let np = grid.points_per_axis;
    let period = 2.0 * grid.half_width;
    (0..np)
        .map(|k| {
            let k = if k < np.div_ceil(2) { k as f64 } else { k as f64 - np as f64 };
            2.0 * PI * k / period
        })
        .collect()
}

/// Frequency vector of every Fourier mode, in FFT (row-major) order.
pub fn frequencies(grid: &Grid) -> Vec<[f64; 3]> {
    let axis = axis_frequencies(grid);
    let np = grid.points_per_axis;
    (0..grid.num_points())
        .map(|p| {
            let mut xi = [0.0; 3];
            let mut rest = p;
            for k in (0..grid.n).rev() {
                xi[k] = axis[rest % np];
                rest /= np;
            }
            xi
        })
        .collect()
}

/// Assemble and diagonalize `D_m + V` on a periodic grid.
pub fn discretize_hamiltonian(
    mats: &DiracMatrices,
    m: f64,
    potential: &BlockDiagonal,
    grid: &Grid,
) -> Result<DiscreteHamiltonian> {
    if !grid.periodic {
        return Err(Error::invalid("the propagator needs a periodic grid"));
    }
    if mats.dimension() != grid.n {
        return Err(Error::invalid("Clifford family and grid dimensions differ"));
    }
    if !(m >= 0.0) {
        return Err(Error::invalid("mass must be non-negative"));
    }
    let s = mats.spinor_dim();
    let pts = grid.num_points();
    if potential.points() != pts || potential.spinor_dim != s {
        return Err(Error::invalid("potential was sampled on a different grid"));
    }
    let dim = pts * s;
    check_memcap(dim)?;

    // Position-space kernel K_ab(u) = (1/N) sum_k e^{i xi_k u} symbol_ab(xi_k).
    let fft = FftNd::new(&vec![grid.points_per_axis; grid.n]);
    let xis = frequencies(grid);
    let mut kernel = vec![vec![ZERO; pts]; s * s];
    for (ab, table) in kernel.iter_mut().enumerate() {
        let (a, b) = (ab / s, ab % s);
        for (k, xi) in xis.iter().enumerate() {
            table[k] = mats.symbol(&xi[..grid.n], m)[(a, b)];
        }
        fft.inverse(table);
    }
    let np = grid.points_per_axis;
    let mut matrix = Mat::<C64>::zeros(dim, dim);
    for p in 0..pts {
        let ip = grid.multi_index(p);
        for q in 0..pts {
            let iq = grid.multi_index(q);
            let mut off = 0;
            for k in 0..grid.n {
                off = off * np + (ip[k] + np - iq[k]) % np;
            }
            for a in 0..s {
                for b in 0..s {
                    matrix[(p * s + a, q * s + b)] = kernel[a * s + b][off];
                }
            }
        }
        let v = potential.block(p);
        for a in 0..s {
            for b in 0..s {
                matrix[(p * s + a, p * s + b)] += v[a * s + b];
            }
        }
    }
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..dim {
        for j in 0..=i {
            defect = defect.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            scale = scale.max(matrix[(i, j)].norm());
        }
    }
    if defect > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let eig = matrix
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = (0..dim).map(|i| eig.S()[i].re).collect();
    let eigenvectors = eig.U().to_owned();
    let mut h = DiscreteHamiltonian {
        grid: grid.clone(),
        m,
        spinor_dim: s,
        matrix,
        eigenvalues,
        eigenvectors,
        point_spectrum_flags: vec![false; dim],
        warnings: Vec::new(),
    };
    let proj = continuous_projection(&h);
    h.point_spectrum_flags = proj.flags.clone();
    h.warnings = proj.warnings;
    Ok(h)
}

impl DiscreteHamiltonian {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |V^* V - I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for i in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).norm());
            }
        }
        worst
    }

    /// Coefficients `<v_k, f>` in the eigenbasis.
    pub fn coefficients(&self, f: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let cols: Vec<C64> = (0..d)
            .into_par_iter()
            .map(|k| {
                let col = self.eigenvectors.col(k);
                (0..d).map(|i| col[i].conj() * f[i]).sum()
            })
            .collect();
        cols
    }

    /// `sum_k c_k v_k`.
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![ZERO; d];
        for (k, c) in coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let col = self.eigenvectors.col(k);
            for i in 0..d {
                out[i] += col[i] * c;
            }
        }
        out
    }

    /// Largest `|E|`, which sets the quadrature step.
    pub fn max_frequency(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, e| a.max(e.abs()))
    }
}

/// The projection off flagged (bound-state surrogate) eigenpairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousProjection {
    pub flags: Vec<bool>,
    pub participation: Vec<f64>,
    pub average_participation: f64,
    pub gap_tol: f64,
    pub localization_cutoff: f64,
    pub warnings: Vec<String>,
}

impl ContinuousProjection {
    pub fn rank_deficit(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    /// Dense matrix of `P_c`.
    pub fn to_dense(&self, h: &DiscreteHamiltonian) -> Mat<C64> {
        let d = h.dim();
        let mut p = Mat::<C64>::identity(d, d);
        for (k, _) in self.flags.iter().enumerate().filter(|(_, f)| **f) {
            let v = h.eigenvectors.col(k);
            for j in 0..d {
                for i in 0..d {
                    p[(i, j)] -= v[i] * v[j].conj();
                }
            }
        }
        p
    }
}

/// Participation ratio `(sum rho)^2 / (N sum rho^2)` of the point density of `v`.
pub fn participation_ratio(v: &[C64], spinor_dim: usize) -> f64 {
    let rho: Vec<f64> = v
        .chunks(spinor_dim)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let total: f64 = rho.iter().sum();
    let sq: f64 = rho.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        return 0.0;
    }
    total * total / (rho.len() as f64 * sq)
}

/// Classify eigenpairs: in-gap energies or strongly localized vectors are point spectrum.
pub fn continuous_projection(h: &DiscreteHamiltonian) -> ContinuousProjection {
    let d = h.dim();
    let participation: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|k| {
            let col = h.eigenvectors.col(k);
            let v: Vec<C64> = (0..d).map(|i| col[i]).collect();
            participation_ratio(&v, h.spinor_dim)
        })
        .collect();
    let average = participation.iter().sum::<f64>() / d.max(1) as f64;
    let cutoff = LOCALIZATION_CUTOFF * average;
    let mut warnings = Vec::new();
    let flags = (0..d)
        .map(|k| {
            let e = h.eigenvalues[k];
            let in_gap = e.abs() < h.m - GAP_TOL;
            let localized = participation[k] < cutoff;
            if !in_gap && (participation[k] - cutoff).abs() < 0.2 * cutoff {
                warnings.push(format!(
                    "eigenvalue {e:.6} has participation ratio {:.4} within 20% of the cutoff {cutoff:.4}",
                    participation[k]
                ));
            }
            in_gap || localized
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    ContinuousProjection {
        flags,
        participation,
        average_participation: average,
        gap_tol: GAP_TOL,
        localization_cutoff: LOCALIZATION_CUTOFF,
        warnings,
    }
}

fn check_field(h: &DiscreteHamiltonian, f: &SpinorField) -> Result<()> {
    if f.grid != h.grid || f.spinor_dim != h.spinor_dim {
        return Err(Error::invalid("initial datum lives on a different grid"));
    }
    Ok(())
}

/// `e^{-itH} f` (optionally `e^{-itH} P_c f`) at each requested time.
pub fn evolve_coefficients(h: &DiscreteHamiltonian, coeffs: &[C64], times: &[f64]) -> Vec<Vec<C64>> {
    times
        .par_iter()
        .map(|&t| {
            let phased: Vec<C64> = coeffs
                .iter()
                .zip(&h.eigenvalues)
                .map(|(c, e)| c * C64::from_polar(1.0, -e * t))
                .collect();
            h.synthesize(&phased)
        })
        .collect()
}

pub fn evolve(h: &DiscreteHamiltonian, f: &SpinorField, times: &[f64]) -> Result<Vec<SpinorField>> {
    check_field(h, f)?;
    let c = h.coefficients(&f.values);
    evolve_coefficients(h, &c, times)
        .into_iter()
        .map(|v| SpinorField::from_values(&h.grid, h.spinor_dim, v))
        .collect()
}

fn projected_coefficients(h: &DiscreteHamiltonian, f: &[C64], project: bool) -> Vec<C64> {
    let mut c = h.coefficients(f);
    if project {
        for (ck, flag) in c.iter_mut().zip(&h.point_spectrum_flags) {
            if *flag {
                *ck = ZERO;
            }
        }
    }
    c
}

/// Mixed-norm exponents and window of a Strichartz measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzQuery {
    /// Time exponent; `f64::INFINITY` for the supremum.
    #[serde(with = "extended_real")]
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub massive: bool,
    pub window: f64,
    /// Minimum number of time samples; more are used when the grid needs them.
    pub time_samples: usize,
    /// Apply `P_c` before measuring.
    #[serde(default = "yes")]
    pub project: bool,
}

fn yes() -> bool {
    true
}

/// Serialize infinities as the string `"inf"`.
mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("'{t}' is not a number or 'inf'"))),
        }
    }
}

impl StrichartzQuery {
    /// Every violated admissibility condition, spelled out.
    pub fn violations(&self, n: usize) -> Vec<String> {
        let nf = n as f64;
        let (p, q, theta) = (self.p, self.q, self.theta);
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let mut out = Vec::new();
        if !(self.window > 0.0) {
            out.push("time window T must be positive".into());
        }
        if !(q >= 2.0) {
            out.push(format!("q = {q} violates 2 <= q"));
        }
        if !(p >= 2.0) {
            out.push(format!("p = {p} violates p >= 2"));
        }
        let eps = 1e-12;
        if self.massive {
            if n > 2 && !(q < 2.0 * nf / (nf - 2.0)) {
                out.push(format!("q = {q} violates q < 2n/(n-2) = {}", 2.0 * nf / (nf - 2.0)));
            }
            if !q.is_finite() {
                out.push("q must be finite".into());
            }
            let line = 2.0 * inv_p + nf / q;
            if (line - nf / 2.0).abs() > eps {
                out.push(format!("2/p + n/q = {line} violates 2/p + n/q = n/2 = {}", nf / 2.0));
            }
            let need = 0.5 + inv_p - 1.0 / q;
            if theta < need - eps {
                out.push(format!("theta = {theta} violates theta >= 1/2 + 1/p - 1/q = {need}"));
            }
        } else {
            if !(p > 2.0) {
                out.push(format!("p = {p} violates p > 2 for the massless estimate"));
            }
            if !q.is_finite() {
                out.push("q must be finite".into());
            }
            let lhs = 2.0 * inv_p + (nf - 1.0) / q;
            if lhs > (nf - 1.0) / 2.0 + eps {
                out.push(format!(
                    "2/p + (n-1)/q = {lhs} violates 2/p + (n-1)/q <= (n-1)/2 = {}",
                    (nf - 1.0) / 2.0
                ));
            }
            let want = nf / 2.0 - inv_p - nf / q;
            if (theta - want).abs() > eps {
                out.push(format!("theta = {theta} violates theta = n/2 - 1/p - n/q = {want}"));
            }
        }
        out
    }
}

/// Sample times `0 = t_0 < ... < t_K = T`, fine enough for the fastest mode.
pub fn time_grid(h: &DiscreteHamiltonian, window: f64, minimum: usize) -> Vec<f64> {
    let per_unit = SAMPLES_PER_PERIOD * h.max_frequency().max(1.0) / (2.0 * PI);
    let intervals = ((window * per_unit).ceil() as usize).max(minimum.max(2) - 1).max(1);
    (0..=intervals).map(|k| window * k as f64 / intervals as f64).collect()
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `<grad>^{-theta}` (massive) or `|grad|^{-theta}` with the mean removed (massless), componentwise.
pub fn fourier_multiplier(grid: &Grid, spinor_dim: usize, values: &[C64], theta: f64, massive: bool) -> Vec<C64> {
    let fft = FftNd::new(&vec![grid.points_per_axis; grid.n]);
    let xis = frequencies(grid);
    let symbol: Vec<f64> = xis
        .iter()
        .map(|xi| {
            let k2: f64 = xi[..grid.n].iter().map(|v| v * v).sum();
            if massive {
                (1.0 + k2).powf(-0.5 * theta)
            } else if k2 == 0.0 {
                0.0
            } else {
                k2.powf(-0.5 * theta)
            }
        })
        .collect();
    let pts = grid.num_points();
    let mut out = vec![ZERO; values.len()];
    let mut buf = vec![ZERO; pts];
    for a in 0..spinor_dim {
        for p in 0..pts {
            buf[p] = values[p * spinor_dim + a];
        }
        fft.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&symbol) {
            *b *= *s;
        }
        fft.inverse(&mut buf);
        for p in 0..pts {
            out[p * spinor_dim + a] = buf[p];
        }
    }
    out
}

/// Relative size of the zero Fourier mode of `values`.
pub fn mean_mode_fraction(grid: &Grid, spinor_dim: usize, values: &[C64]) -> f64 {
    let pts = grid.num_points() as f64;
    let mut mean2 = 0.0;
    for a in 0..spinor_dim {
        let m: C64 = values.iter().skip(a).step_by(spinor_dim).sum::<C64>() / pts;
        mean2 += m.norm_sqr();
    }
    let total: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts;
    if total == 0.0 {
        0.0
    } else {
        (mean2 / total).sqrt()
    }
}

/// Tolerance on the mean mode of a massless datum.
pub const MEAN_MODE_TOL: f64 = 1e-8;

fn lq_norm(grid: &Grid, spinor_dim: usize, values: &[C64], q: f64) -> f64 {
    let vol = grid.cell_volume();
    let dens = values
        .chunks(spinor_dim)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    if q.is_infinite() {
        dens.fold(0.0, f64::max)
    } else {
        (dens.map(|v| v.powf(q)).sum::<f64>() * vol).powf(1.0 / q)
    }
}

/// `| <grad>^{-theta} e^{-itH} P_c f |_{L^p_t([0,T]) L^q_x} / |f|_2`.
pub fn strichartz_norm(h: &DiscreteHamiltonian, f: &SpinorField, query: &StrichartzQuery) -> Result<f64> {
    check_field(h, f)?;
    let bad = query.violations(h.grid.n);
    if !bad.is_empty() {
        return Err(Error::invalid(format!("inadmissible Strichartz exponents: {}", bad.join("; "))));
    }
    let norm_f = f.l2_norm();
    if norm_f == 0.0 {
        return Ok(0.0);
    }
    if !query.massive && query.theta != 0.0 {
        let frac = mean_mode_fraction(&h.grid, h.spinor_dim, &f.values);
        if frac > MEAN_MODE_TOL {
            return Err(Error::invalid(format!(
                "massless smoothing |grad|^-theta needs a mean-free datum (mean fraction {frac:.3e})"
            )));
        }
    }
    let coeffs = projected_coefficients(h, &f.values, query.project);
    let times = time_grid(h, query.window, query.time_samples);
    let states = evolve_coefficients(h, &coeffs, &times);
    let inner: Vec<f64> = states
        .par_iter()
        .map(|psi| {
            let smoothed = if query.theta == 0.0 {
                psi.clone()
            } else {
                fourier_multiplier(&h.grid, h.spinor_dim, psi, query.theta, query.massive)
            };
            lq_norm(&h.grid, h.spinor_dim, &smoothed, query.q)
        })
        .collect();
    let mixed = if query.p.is_infinite() {
        inner.iter().cloned().fold(0.0, f64::max)
    } else {
        let powered: Vec<f64> = inner.iter().map(|v| v.powf(query.p)).collect();
        trapezoid(&times, &powered).powf(1.0 / query.p)
    };
    Ok(mixed / norm_f)
}

/// `( int_0^T |<x>^{-sigma} P_c e^{-itH} f|_2^2 dt )^{1/2} / |f|_2`.
pub fn kato_smoothing_norm(
    h: &DiscreteHamiltonian,
    f: &SpinorField,
    sigma: f64,
    window: f64,
    project: bool,
) -> Result<f64> {
    check_field(h, f)?;
    if !(sigma > 0.5) {
        return Err(Error::invalid(format!("sigma = {sigma}: Kato smoothing needs sigma > 1/2")));
    }
    if !(window > 0.0) {
        return Err(Error::invalid("time window must be positive"));
    }
    let norm_f = f.l2_norm();
    if norm_f == 0.0 {
        return Ok(0.0);
    }
    let weight = h.grid.weight(sigma);
    let coeffs = projected_coefficients(h, &f.values, project);
    let times = time_grid(h, window, 2);
    let s = h.spinor_dim;
    let vol = h.grid.cell_volume();
    let sq: Vec<f64> = evolve_coefficients(h, &coeffs, &times)
        .par_iter()
        .map(|psi| {
            psi.chunks(s)
                .zip(&weight)
                .map(|(c, w)| w * w * c.iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum::<f64>()
                * vol
        })
        .collect();
    Ok(trapezoid(&times, &sq).sqrt() / norm_f)
}

/// Per-time `L^2` norm and weighted norm of an evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRow {
    pub t: f64,
    pub l2_norm: f64,
    pub weighted_norm: f64,
}

pub fn evolution_table(
    h: &DiscreteHamiltonian,
    f: &SpinorField,
    times: &[f64],
    sigma: f64,
) -> Result<Vec<EvolutionRow>> {
    let states = evolve(h, f, times)?;
    let weight = h.grid.weight(sigma);
    let vol = h.grid.cell_volume();
    Ok(states
        .iter()
        .zip(times)
        .map(|(psi, &t)| {
            let weighted: f64 = psi
                .values
                .chunks(h.spinor_dim)
                .zip(&weight)
                .map(|(c, w)| w * w * c.iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum::<f64>()
                * vol;
            EvolutionRow {
                t,
                l2_norm: psi.l2_norm(),
                weighted_norm: weighted.sqrt(),
            }
        })
        .collect())
}

/// Gaussian wave packet `exp(-|x - c|^2 / (2 w^2)) e^{i k.x} v`.
pub fn wave_packet(grid: &Grid, spinor: &[C64], center: &[f64], width: f64, momentum: &[f64]) -> SpinorField {
    SpinorField::sample(grid, spinor.len(), |x| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for k in 0..grid.n {
            r2 += (x[k] - center[k]).powi(2);
            phase += momentum[k] * x[k];
        }
        let amp = C64::from_polar((-0.5 * r2 / (width * width)).exp(), phase);
        spinor.iter().map(|v| v * amp).collect()
    })
}

/// Remove the zero Fourier mode of each component.
pub fn remove_mean(f: &SpinorField) -> SpinorField {
    let s = f.spinor_dim;
    let pts = f.grid.num_points() as f64;
    let mut values = f.values.clone();
    for a in 0..s {
        let mean: C64 = f.values.iter().skip(a).step_by(s).sum::<C64>() / pts;
        for v in values.iter_mut().skip(a).step_by(s) {
            *v -= mean;
        }
    }
    SpinorField {
        grid: f.grid.clone(),
        spinor_dim: s,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sample_potential, PotentialSpec};
    use crate::linalg;

    fn small() -> (Grid, DiracMatrices) {
        (Grid::new(2, 4.0, 8, true).unwrap(), DiracMatrices::new(2).unwrap())
    }

    #[test]
    fn free_spectrum_is_the_symbol_spectrum() {
        let (grid, mats) = small();
        let v = BlockDiagonal::zeros(grid.num_points(), 2);
        let h = discretize_hamiltonian(&mats, 1.0, &v, &grid).unwrap();
        let mut want: Vec<f64> = frequencies(&grid)
            .iter()
            .flat_map(|xi| {
                let e = (xi[0] * xi[0] + xi[1] * xi[1] + 1.0).sqrt();
                [-e, e]
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in h.eigenvalues.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(h.eigenvalues.iter().all(|e| e.abs() >= 1.0 - 1e-10));
        assert!(h.orthonormality_defect() < 1e-8);
        assert!(h.point_spectrum_flags.iter().all(|f| !f));
    }

    #[test]
    fn projection_is_orthogonal() {
        let (grid, mats) = small();
        let v = sample_potential(&PotentialSpec::gaussian(-3.0, 1.0), &grid, &mats).unwrap();
        let h = discretize_hamiltonian(&mats, 1.0, &v, &grid).unwrap();
        let proj = continuous_projection(&h);
        assert!(proj.rank_deficit() >= 1, "an attractive well binds");
        let p = proj.to_dense(&h);
        let p2 = &p * &p;
        let d = h.dim();
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for i in 0..d {
                worst = worst.max((p2[(i, j)] - p[(i, j)]).norm());
                worst = worst.max((p[(i, j)] - p[(j, i)].conj()).norm());
            }
        }
        assert!(worst < 1e-10);
        let trace: f64 = (0..d).map(|i| p[(i, i)].re).sum();
        assert!((d as f64 - trace - proj.rank_deficit() as f64).abs() < 1e-8);
    }

    #[test]
    fn plane_wave_evolves_by_a_phase() {
        let (grid, mats) = small();
        let m = 0.7;
        let v = BlockDiagonal::zeros(grid.num_points(), 2);
        let h = discretize_hamiltonian(&mats, m, &v, &grid).unwrap();
        let xi = [2.0 * PI / 8.0, -2.0 * 2.0 * PI / 8.0];
        let sym = mats.symbol(&xi, m);
        let dense = faer::Mat::<C64>::from_fn(2, 2, |i, j| sym[(i, j)]);
        let eig = dense.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let e = eig.S()[1].re;
        let spinor = [eig.U()[(0, 1)], eig.U()[(1, 1)]];
        let f = wave_packet(&grid, &spinor, &[0.0, 0.0], f64::INFINITY, &xi);
        let out = evolve(&h, &f, &[0.0, 0.8, 2.5]).unwrap();
        for (psi, t) in out.iter().zip([0.0, 0.8, 2.5]) {
            let phase = C64::from_polar(1.0, -e * t);
            for (a, b) in psi.values.iter().zip(&f.values) {
                assert!((a - phase * b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn evolution_is_unitary() {
        let (grid, mats) = small();
        let v = sample_potential(&PotentialSpec::gaussian(-1.0, 1.0), &grid, &mats).unwrap();
        let h = discretize_hamiltonian(&mats, 0.0, &v, &grid).unwrap();
        let f = wave_packet(&grid, &[C64::new(1.0, 0.0), C64::new(0.0, 0.5)], &[0.5, 0.0], 1.0, &[0.0, 1.0]);
        let rows = evolution_table(&h, &f, &[0.0, 1.0, 3.0, 7.0], 0.6).unwrap();
        for r in &rows {
            assert!((r.l2_norm - f.l2_norm()).abs() < 1e-8 * f.l2_norm());
        }
        assert!((rows[0].l2_norm - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn unitarity_endpoint_of_the_strichartz_line() {
        let (grid, mats) = small();
        let v = BlockDiagonal::zeros(grid.num_points(), 2);
        let h = discretize_hamiltonian(&mats, 1.0, &v, &grid).unwrap();
        let f = wave_packet(&grid, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &[0.0, 0.0], 1.0, &[0.0, 0.0]);
        let q = StrichartzQuery {
            p: f64::INFINITY,
            q: 2.0,
            theta: 0.0,
            massive: true,
            window: 2.0,
            time_samples: 16,
            project: true,
        };
        let r = strichartz_norm(&h, &f, &q).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn admissibility() {
        let q = |p: f64, q: f64, theta: f64, massive: bool| StrichartzQuery {
            p,
            q,
            theta,
            massive,
            window: 1.0,
            time_samples: 8,
            project: true,
        };
        assert!(q(6.0, 6.0, 0.5, false).violations(2).is_empty());
        let bad = q(4.0, 4.0, 0.25, false).violations(2);
        assert!(bad.iter().any(|m| m.contains("2/p + (n-1)/q")), "{bad:?}");
        assert!(q(f64::INFINITY, 2.0, 0.0, true).violations(2).is_empty());
        assert!(!q(4.0, 4.0, 0.0, true).violations(2).is_empty());
        let json = serde_json::to_string(&q(f64::INFINITY, 2.0, 0.0, true)).unwrap();
        assert!(json.contains("\"inf\""));
        let back: StrichartzQuery = serde_json::from_str(&json).unwrap();
        assert!(back.p.is_infinite());
    }

    #[test]
    fn multiplier_is_a_positive_contraction() {
        let (grid, _) = small();
        let f = wave_packet(&grid, &[C64::new(1.0, 0.0), C64::new(0.3, 0.0)], &[1.0, -0.5], 0.8, &[1.0, 0.0]);
        let g = fourier_multiplier(&grid, 2, &f.values, 0.5, true);
        assert!(linalg::norm2(&g) <= linalg::norm2(&f.values));
        let ip = linalg::dot(&f.values, &g);
        assert!(ip.re > 0.0 && ip.im.abs() < 1e-10 * ip.re);
    }

    #[test]
    fn zero_datum_gives_zero() {
        let (grid, mats) = small();
        let v = BlockDiagonal::zeros(grid.num_points(), 2);
        let h = discretize_hamiltonian(&mats, 0.0, &v, &grid).unwrap();
        let f = SpinorField::zeros(&grid, 2);
        assert_eq!(kato_smoothing_norm(&h, &f, 0.6, 1.0, true).unwrap(), 0.0);
        assert!(kato_smoothing_norm(&h, &f, 0.4, 1.0, true).is_err());
    }

    #[test]
    fn non_periodic_grids_are_refused() {
        let grid = Grid::new(2, 4.0, 8, false).unwrap();
        let mats = DiracMatrices::new(2).unwrap();
        let v = BlockDiagonal::zeros(grid.num_points(), 2);
        assert!(discretize_hamiltonian(&mats, 0.0, &v, &grid).is_err());
    }
}
