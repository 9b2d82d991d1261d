//! Products `prod_k L_z R_{i_k}(z^2)` of truncated resolvents and the Neumann tail.
//!
//! `L_z = V (D_m + lambda)` with `lambda = sqrt(z^2 + m^2)`, so each factor
//! `L_z R_i(z^2)` is the potential times the Dirac-type kernel
//! `(-i alpha.grad + m beta + lambda)` applied to the truncated scalar kernel.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::SpherePartition;
use crate::clifford::{DiracMatrices, SpinMatrix};
use crate::fields::norms::{b_to_b_norm, Bracket};
use crate::fields::operator::{BlockDiagonal, LinearOperator, Product};
use crate::fields::resolvent::{ball_integral, dirac_operator, equal_volume_radius};
use crate::fields::{assemble_operator, Grid, KernelOperator};
use crate::kernels::{dirac_from_scalar, short_range_scalar, truncated_scalar, Branch};
use crate::{Error, Result, ZERO};
#[cfg(test)]
use crate::C64;

/// One factor of a product: a partition piece or the short-range remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProductIndex {
    Cap(usize),
    Short,
}

impl fmt::Display for ProductIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductIndex::Cap(i) => write!(f, "{i}"),
            ProductIndex::Short => write!(f, "d"),
        }
    }
}

impl FromStr for ProductIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "d" {
            return Ok(ProductIndex::Short);
        }
        s.parse()
            .map(ProductIndex::Cap)
            .map_err(|_| Error::invalid(format!("product index '{s}' is neither 'd' nor a cap number")))
    }
}

impl Serialize for ProductIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ProductIndex::Cap(i) => s.serialize_u64(*i as u64),
            ProductIndex::Short => s.serialize_str("d"),
        }
    }
}

impl<'de> Deserialize<'de> for ProductIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(i) => Ok(ProductIndex::Cap(i)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Indices `i_1 .. i_M` of a product together with `z` and the range cutoff `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub indices: Vec<ProductIndex>,
    pub z: f64,
    pub d: f64,
}

impl ProductSpec {
    pub fn new(indices: Vec<ProductIndex>, z: f64, d: f64) -> Self {
        Self { indices, z, d }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Compact label such as `3-d-17`.
    pub fn label(&self) -> String {
        self.indices
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductClass {
    Directed,
    Undirected,
}

impl fmt::Display for ProductClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProductClass::Directed => "directed",
            ProductClass::Undirected => "undirected",
        })
    }
}

/// Directed iff, after dropping short-range factors, neighbouring caps are aligned.
pub fn classify_product(spec: &ProductSpec, partition: &SpherePartition) -> Result<ProductClass> {
    if spec.is_empty() {
        return Err(Error::invalid("a product needs at least one factor"));
    }
    let caps: Vec<usize> = spec
        .indices
        .iter()
        .filter_map(|i| match i {
            ProductIndex::Cap(c) => Some(*c),
            ProductIndex::Short => None,
        })
        .collect();
    if let Some(bad) = caps.iter().find(|&&c| c >= partition.len()) {
        return Err(Error::invalid(format!(
            "cap index {bad} out of range for a partition with {} pieces",
            partition.len()
        )));
    }
    let directed = caps.windows(2).all(|w| partition.aligned(w[0], w[1]));
    Ok(if directed {
        ProductClass::Directed
    } else {
        ProductClass::Undirected
    })
}

fn check_z(z: f64, d: f64, grid: &Grid) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::invalid("z must be positive"));
    }
    if !(d > 0.0) {
        return Err(Error::invalid("range cutoff d must be positive"));
    }
    // At least eight grid points per wavelength.
    let limit = std::f64::consts::PI / (4.0 * z);
    if grid.spacing() > limit * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "grid spacing {} does not resolve z = {z}; need h <= pi / (4 z) = {limit}",
            grid.spacing()
        )));
    }
    Ok(())
}

/// `(D_m + lambda) R_i(z^2)` for a partition piece.
pub fn directed_factor(
    partition: &SpherePartition,
    cap: usize,
    z: f64,
    d: f64,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    branch: Branch,
) -> Result<KernelOperator> {
    check_z(z, d, grid)?;
    if partition.n != grid.n || mats.dimension() != grid.n {
        return Err(Error::invalid("partition, Clifford family and grid dimensions differ"));
    }
    if cap >= partition.len() {
        return Err(Error::invalid(format!("cap index {cap} out of range")));
    }
    let n = grid.n;
    let lambda = (z * z + m * m).sqrt();
    let piece = partition.piece(cap);
    let s = mats.spinor_dim();
    assemble_operator(
        grid,
        s,
        Some(branch),
        &format!("directed_{cap}"),
        |u| {
            let (g, grad) = truncated_scalar(n, z, u, branch, d, &piece);
            dirac_from_scalar(mats, m, lambda, g, &grad[..n])
        },
        &SpinMatrix::zeros(s),
    )
}

/// `(D_m + lambda) R_d(z^2)`, the short-range remainder.
pub fn short_range_factor(
    z: f64,
    d: f64,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    branch: Branch,
) -> Result<KernelOperator> {
    check_z(z, d, grid)?;
    let n = grid.n;
    let rho = equal_volume_radius(grid);
    if rho >= 0.5 * d {
        log::warn!("range cutoff d = {d} is below the cell size; the diagonal cell is only partly short-range");
    }
    let lambda = (z * z + m * m).sqrt();
    let s = mats.spinor_dim();
    let cell = ball_integral(n, z, rho, branch);
    let diag = dirac_from_scalar(mats, m, lambda, cell, &[ZERO; 3][..n]);
    assemble_operator(
        grid,
        s,
        Some(branch),
        "short_range",
        |u| {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (g, dg) = short_range_scalar(n, z, r, branch, d);
            let mut grad = [ZERO; 3];
            for k in 0..n {
                grad[k] = dg * (u[k] / r);
            }
            dirac_from_scalar(mats, m, lambda, g, &grad[..n])
        },
        &diag,
    )
}

/// `B -> B` bracket of `prod_k L_z R_{i_k}(z^2)`, leftmost factor applied last.
pub fn product_norm(
    spec: &ProductSpec,
    partition: &SpherePartition,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    branch: Branch,
) -> Result<Bracket> {
    classify_product(spec, partition)?;
    check_z(spec.z, spec.d, grid)?;
    if potential.points() != grid.num_points() || potential.spinor_dim != mats.spinor_dim() {
        return Err(Error::invalid("potential was sampled on a different grid"));
    }
    if potential.blocks.iter().all(|v| *v == ZERO) {
        return Ok(Bracket { lo: 0.0, hi: 0.0 });
    }
    let mut factors: BTreeMap<ProductIndex, KernelOperator> = BTreeMap::new();
    for &idx in &spec.indices {
        if factors.contains_key(&idx) {
            continue;
        }
        let op = match idx {
            ProductIndex::Cap(c) => directed_factor(partition, c, spec.z, spec.d, mats, m, grid, branch)?,
            ProductIndex::Short => short_range_factor(spec.z, spec.d, mats, m, grid, branch)?,
        };
        factors.insert(idx, op);
    }
    let mut chain: Vec<&dyn LinearOperator> = Vec::with_capacity(2 * spec.len());
    for idx in &spec.indices {
        chain.push(potential);
        chain.push(&factors[idx]);
    }
    b_to_b_norm(&Product::new(chain), grid)
}

/// Norms of several products, evaluated in parallel; results keep the input order.
pub fn product_norms(
    specs: &[ProductSpec],
    partition: &SpherePartition,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    branch: Branch,
) -> Vec<Result<Bracket>> {
    specs
        .par_iter()
        .map(|s| product_norm(s, partition, potential, mats, m, grid, branch))
        .collect()
}

/// Outcome of a Neumann tail test at one `(M, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannTail {
    pub power: usize,
    pub z: f64,
    /// `| (L_z R_0(z^2))^M |_{B -> B}`.
    pub norm: Bracket,
    /// `| L_z R_0(z^2) |_{B -> B}`.
    pub single: Bracket,
    /// `norm.hi <= 1/2`.
    pub pass: bool,
    /// Bound on `| (I + L_z R_0)^{-1} |_{B -> B}` from the geometric tail, when `pass`.
    pub inverse_bound: Option<f64>,
    /// The measured power exceeds the submultiplicative bound by more than 5%.
    pub submultiplicativity_flag: bool,
}

/// `| (L_z R_0^branch(z^2))^M |_{B -> B}` against the threshold `1/2`.
pub fn neumann_tail_check(
    power: usize,
    z: f64,
    potential: &BlockDiagonal,
    mats: &DiracMatrices,
    m: f64,
    grid: &Grid,
    branch: Branch,
) -> Result<NeumannTail> {
    if power == 0 {
        return Err(Error::invalid("the product length M must be at least 1"));
    }
    check_z(z, 1.0, grid)?;
    let lambda = (z * z + m * m).sqrt();
    // (D_m + lambda) R_0(z^2) is the free Dirac resolvent at lambda.
    let free = dirac_operator(grid, mats, m, lambda, branch)?;
    let single = b_to_b_norm(&Product::new(vec![potential, &free]), grid)?;
    let norm = if power == 1 {
        single
    } else {
        let mut chain: Vec<&dyn LinearOperator> = Vec::with_capacity(2 * power);
        for _ in 0..power {
            chain.push(potential);
            chain.push(&free);
        }
        b_to_b_norm(&Product::new(chain), grid)?
    };
    let pass = norm.hi <= 0.5;
    // sum_l |T^l| <= (sum_{r<M} |T|^r) / (1 - |T^M|).
    let inverse_bound = pass.then(|| {
        let head: f64 = (0..power).map(|r| single.hi.powi(r as i32)).sum();
        head / (1.0 - norm.hi)
    });
    let submultiplicativity_flag = power > 1 && norm.lo > 1.05 * single.hi.powi(power as i32);
    Ok(NeumannTail {
        power,
        z,
        norm,
        single,
        pass,
        inverse_bound,
        submultiplicativity_flag,
    })
}
