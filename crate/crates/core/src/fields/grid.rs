use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Uniform tensor grid on the box `[-L, L]^n`.
///
/// Nodes sit at `-L + i h` with `h = 2L / points_per_axis`, so the origin is a
/// node whenever `points_per_axis` is even. Points are numbered in row-major
/// order (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub periodic: bool,
}

impl Grid {
    pub fn new(n: usize, half_width: f64, points_per_axis: usize, periodic: bool) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(Error::invalid(format!("grids are supported for n = 2, 3 (got {n})")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("grid half-width L must be positive"));
        }
        if points_per_axis < 1 {
            return Err(Error::invalid("grid needs at least one point per axis"));
        }
        Ok(Self {
            n,
            half_width,
            points_per_axis,
            periodic,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn num_points(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn multi_index(&self, p: usize) -> [usize; 3] {
        let np = self.points_per_axis;
        let mut idx = [0; 3];
        let mut rest = p;
        for a in (0..self.n).rev() {
            idx[a] = rest % np;
            rest /= np;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx[..self.n]
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Coordinates of point `p`; unused trailing entries are zero.
    pub fn point(&self, p: usize) -> [f64; 3] {
        let idx = self.multi_index(p);
        let mut x = [0.0; 3];
        for a in 0..self.n {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    pub fn radius(&self, p: usize) -> f64 {
        self.point(p).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Japanese bracket `<x> = (1 + |x|^2)^{1/2}` at every point.
    pub fn japanese(&self) -> Vec<f64> {
        (0..self.num_points())
            .map(|p| (1.0 + self.radius(p).powi(2)).sqrt())
            .collect()
    }

    /// `<x>^{-sigma}` at every point.
    pub fn weight(&self, sigma: f64) -> Vec<f64> {
        self.japanese().into_iter().map(|j| j.powf(-sigma)).collect()
    }

    /// Same box with twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            points_per_axis: 2 * self.points_per_axis,
            ..self.clone()
        }
    }
}

/// Spinor-valued grid function, point index major and spinor component minor.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub grid: Grid,
    pub spinor_dim: usize,
    pub values: Vec<C64>,
}

impl SpinorField {
    pub fn zeros(grid: &Grid, spinor_dim: usize) -> Self {
        Self {
            grid: grid.clone(),
            spinor_dim,
            values: vec![C64::new(0.0, 0.0); grid.num_points() * spinor_dim],
        }
    }

    pub fn from_values(grid: &Grid, spinor_dim: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.num_points() * spinor_dim {
            return Err(Error::invalid(format!(
                "field has {} entries, grid needs {}",
                values.len(),
                grid.num_points() * spinor_dim
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("field has non-finite entries"));
        }
        Ok(Self {
            grid: grid.clone(),
            spinor_dim,
            values,
        })
    }

    /// Sample `f(x)` (returning one spinor) at every grid point.
    pub fn sample(grid: &Grid, spinor_dim: usize, f: impl Fn(&[f64]) -> Vec<C64>) -> Self {
        let mut values = Vec::with_capacity(grid.num_points() * spinor_dim);
        for p in 0..grid.num_points() {
            let x = grid.point(p);
            let v = f(&x[..grid.n]);
            assert_eq!(v.len(), spinor_dim, "sampled spinor has wrong length");
            values.extend(v);
        }
        Self {
            grid: grid.clone(),
            spinor_dim,
            values,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.grid, &self.values)
    }
}

/// Continuum `L^2` norm of a coefficient vector: `h^{n/2} |v|_2`.
pub fn l2_norm(grid: &Grid, values: &[C64]) -> f64 {
    grid.cell_volume().sqrt() * crate::linalg::norm2(values)
}
