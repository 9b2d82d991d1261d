use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::operator::BlockDiagonal;
use crate::clifford::{DiracMatrices, SpinMatrix};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    /// `s exp(-|x|^2 / width^2)`.
    GaussianBump,
    /// `s <x>^{-rho}`.
    InversePower,
    /// `s exp(1 - 1/(1 - |x|^2/width^2))` inside `|x| < width`, zero outside.
    CompactSmooth,
}

/// Matrix structure `M(x)` multiplying the scalar profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixProfile {
    Scalar,
    Beta,
    /// A fixed Hermitian matrix, rows of `[re, im]` pairs. Rescaled to unit
    /// operator norm on sampling.
    Hermitian(SpinMatrix),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// Coupling `s`.
    pub coupling: f64,
    /// Decay exponent `rho` of the inverse-power profile.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Length scale of the Gaussian and compactly supported profiles.
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_profile")]
    pub matrix_profile: MatrixProfile,
}

fn default_rho() -> f64 {
    2.0
}
fn default_width() -> f64 {
    1.0
}
fn default_profile() -> MatrixProfile {
    MatrixProfile::Scalar
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self {
            kind: PotentialKind::Zero,
            coupling: 0.0,
            rho: default_rho(),
            width: default_width(),
            matrix_profile: MatrixProfile::Scalar,
        }
    }

    pub fn gaussian(coupling: f64, width: f64) -> Self {
        Self {
            kind: PotentialKind::GaussianBump,
            coupling,
            width,
            ..Self::zero()
        }
    }

    pub fn inverse_power(coupling: f64, rho: f64) -> Self {
        Self {
            kind: PotentialKind::InversePower,
            coupling,
            rho,
            ..Self::zero()
        }
    }

    pub fn compact(coupling: f64, width: f64) -> Self {
        Self {
            kind: PotentialKind::CompactSmooth,
            coupling,
            width,
            ..Self::zero()
        }
    }

    pub fn with_profile(mut self, profile: MatrixProfile) -> Self {
        self.matrix_profile = profile;
        self
    }

    /// Scalar profile at `x`, including the coupling.
    pub fn profile(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let shape = match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::GaussianBump => (-r2 / (self.width * self.width)).exp(),
            PotentialKind::InversePower => (1.0 + r2).powf(-0.5 * self.rho),
            PotentialKind::CompactSmooth => {
                let t = r2 / (self.width * self.width);
                if t < 1.0 {
                    (1.0 - 1.0 / (1.0 - t)).exp()
                } else {
                    0.0
                }
            }
        };
        self.coupling * shape
    }

    /// Problems with the spec itself (not with how it is used).
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !self.coupling.is_finite() {
            errors.push("potential.coupling must be finite".to_string());
        }
        if self.kind == PotentialKind::InversePower && !(self.rho > 0.0) {
            errors.push("potential.rho must be positive".to_string());
        }
        if matches!(self.kind, PotentialKind::GaussianBump | PotentialKind::CompactSmooth)
            && !(self.width > 0.0)
        {
            errors.push("potential.width must be positive".to_string());
        }
        if let MatrixProfile::Hermitian(m) = &self.matrix_profile {
            if !m.is_hermitian(1e-14) {
                errors.push("potential.matrix_profile must be Hermitian".to_string());
            }
        }
        errors
    }

    /// Decay exponent `rho` such that `|V(x)| <~ <x>^{-rho}`; infinite for fast decay.
    pub fn decay_exponent(&self) -> f64 {
        match self.kind {
            PotentialKind::InversePower => self.rho,
            _ => f64::INFINITY,
        }
    }
}

/// Sample `V(x) = s f(x) M` at every grid point.
pub fn sample_potential(
    spec: &PotentialSpec,
    grid: &Grid,
    mats: &DiracMatrices,
) -> Result<BlockDiagonal> {
    let errors = spec.validate();
    if !errors.is_empty() {
        return Err(Error::invalid(errors.join("; ")));
    }
    if mats.dimension() != grid.n {
        return Err(Error::invalid("Clifford family and grid dimensions differ"));
    }
    let s = mats.spinor_dim();
    let matrix = match &spec.matrix_profile {
        MatrixProfile::Scalar => SpinMatrix::identity(s),
        MatrixProfile::Beta => mats.beta().clone(),
        MatrixProfile::Hermitian(m) => {
            if m.dim() != s {
                return Err(Error::invalid(format!(
                    "matrix profile is {0}x{0}, spinors have {s} components",
                    m.dim()
                )));
            }
            let norm = crate::linalg::small_spectral_norm(m.as_slice(), s);
            if norm == 0.0 {
                m.clone()
            } else {
                m.scale(C64::new(1.0 / norm, 0.0))
            }
        }
    };
    let mut v = BlockDiagonal::zeros(grid.num_points(), s);
    for p in 0..grid.num_points() {
        let x = grid.point(p);
        let f = spec.profile(&x[..grid.n]);
        if f == 0.0 {
            continue;
        }
        for (dst, src) in v.block_mut(p).iter_mut().zip(matrix.as_slice()) {
            *dst = src * f;
        }
    }
    if spec.kind == PotentialKind::InversePower && spec.rho <= 1.0 {
        log::warn!(
            "potential decay rho = {} does not exceed 1; limiting absorption hypotheses fail",
            spec.rho
        );
    }
    Ok(v)
}
