//! Smooth partitions of unity on the circle and the 2-sphere.
//!
//! On the circle the pieces are equal arcs whose ends are blended over a
//! tenth of the arc length. On the sphere the cap centers are the vertices
//! of a subdivided icosahedron; each carries a radial bump in the geodesic
//! angle and the bumps are normalized by their sum.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::kernels::{smoothstep, smoothstep_derivative, AngularWeight};
use crate::{Error, Result};

/// Largest partition that will be built.
pub const MAX_CAPS: usize = 10_000;
/// Blend width of neighbouring arcs, relative to the arc length.
pub const ARC_OVERLAP: f64 = 0.1;
/// Support radius of a spherical cap bump, relative to `delta`.
pub const CAP_RADIUS: f64 = 0.55;
/// Separation (in units of `delta`) beyond which two caps count as undirected.
pub const DIRECTED_SEPARATION: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum Layout {
    /// Arc `i` covers `[i s, (i + 1) s]` plus blends of width `overlap`.
    Arcs { arc: f64, overlap: f64 },
    /// Bumps `1 - smoothstep(angle / radius)` around each center.
    Caps { radius: f64, frequency: usize, covering_radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePartition {
    pub n: usize,
    pub delta: f64,
    pub centers: Vec<Vec<f64>>,
    pub layout: Layout,
}

/// Partition of unity on `S^{n-1}` with pieces of diameter about `delta`.
///
/// For `n = 2` any `delta` in `(0, pi]` is accepted (the arc count is
/// `ceil(2 pi / delta)`); for `n = 3`, `delta` must lie in `(0, 1)`.
pub fn sphere_partition(n: usize, delta: f64) -> Result<SpherePartition> {
    match n {
        2 => {
            if !(delta > 0.0 && delta <= PI) {
                return Err(Error::invalid(format!("arc width delta = {delta} must lie in (0, pi]")));
            }
            let raw = (2.0 * PI / delta).ceil();
            if raw > MAX_CAPS as f64 {
                return Err(Error::invalid(format!(
                    "delta = {delta} needs {raw} arcs, more than {MAX_CAPS}"
                )));
            }
            let count = (raw as usize).max(2);
            let arc = 2.0 * PI / count as f64;
            let centers = (0..count)
                .map(|i| {
                    let t = (i as f64 + 0.5) * arc;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            Ok(SpherePartition {
                n,
                delta,
                centers,
                layout: Layout::Arcs {
                    arc,
                    overlap: ARC_OVERLAP * arc,
                },
            })
        }
        3 => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::invalid(format!("cap width delta = {delta} must lie in (0, 1)")));
            }
            let radius = CAP_RADIUS * delta;
            let mut frequency = 1;
            loop {
                if 10 * frequency * frequency + 2 > MAX_CAPS {
                    return Err(Error::invalid(format!(
                        "delta = {delta} needs more than {MAX_CAPS} caps"
                    )));
                }
                let (centers, covering_radius) = geodesic_grid(frequency);
                // Every direction must sit well inside some bump.
                if covering_radius <= 0.7 * radius {
                    return Ok(SpherePartition {
                        n,
                        delta,
                        centers,
                        layout: Layout::Caps {
                            radius,
                            frequency,
                            covering_radius,
                        },
                    });
                }
                frequency += 1;
            }
        }
        _ => Err(Error::invalid(format!("sphere partitions exist for n = 2, 3, not {n}"))),
    }
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    c.clamp(-1.0, 1.0).acos()
}

/// Vertices of the icosahedron subdivided `frequency` times per edge, and
/// the largest circumradius of the resulting spherical triangles.
fn geodesic_grid(frequency: usize) -> (Vec<Vec<f64>>, f64) {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let base: Vec<[f64; 3]> = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ]
    .iter()
    .map(|v| normalized(*v))
    .collect();
    const FACES: [[usize; 3]; 20] = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let f = frequency as f64;
    let mut vertices: BTreeMap<[i64; 3], [f64; 3]> = BTreeMap::new();
    let mut covering: f64 = 0.0;
    for face in FACES {
        let [a, b, c] = face.map(|i| base[i]);
        let at = |i: usize, j: usize| {
            let (s, t) = (i as f64 / f, j as f64 / f);
            normalized([
                a[0] + (b[0] - a[0]) * s + (c[0] - a[0]) * t,
                a[1] + (b[1] - a[1]) * s + (c[1] - a[1]) * t,
                a[2] + (b[2] - a[2]) * s + (c[2] - a[2]) * t,
            ])
        };
        for i in 0..=frequency {
            for j in 0..=(frequency - i) {
                let p = at(i, j);
                let key = p.map(|x| (x * 1e9).round() as i64);
                vertices.entry(key).or_insert(p);
                if i + j < frequency {
                    covering = covering.max(circumradius(p, at(i + 1, j), at(i, j + 1)));
                    if i + j + 1 < frequency {
                        covering = covering.max(circumradius(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)));
                    }
                }
            }
        }
    }
    (vertices.into_values().map(|v| v.to_vec()).collect(), covering)
}

fn circumradius(p: [f64; 3], q: [f64; 3], r: [f64; 3]) -> f64 {
    let u = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    let v = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
    let mut c = normalized([
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]);
    if c[0] * p[0] + c[1] * p[1] + c[2] * p[2] < 0.0 {
        c = c.map(|x| -x);
    }
    angle_between(&c, &p)
}

/// `x` wrapped into `[-pi, pi)`.
fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl SpherePartition {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Angular diameter of the support of each piece.
    pub fn support_diameter(&self) -> f64 {
        match self.layout {
            Layout::Arcs { arc, overlap } => arc + overlap,
            Layout::Caps { radius, .. } => 2.0 * radius,
        }
    }

    /// Great-circle distance between the supports of pieces `i` and `j`.
    pub fn separation(&self, i: usize, j: usize) -> f64 {
        match self.layout {
            Layout::Arcs { arc, overlap } => {
                let count = self.len();
                let diff = i.abs_diff(j);
                let steps = diff.min(count - diff);
                if steps == 0 {
                    return 0.0;
                }
                ((steps - 1) as f64 * arc - overlap).max(0.0)
            }
            Layout::Caps { radius, .. } => {
                (angle_between(&self.centers[i], &self.centers[j]) - 2.0 * radius).max(0.0)
            }
        }
    }

    /// Whether `i` and `j` may follow each other in a directed product.
    pub fn aligned(&self, i: usize, j: usize) -> bool {
        self.separation(i, j) < DIRECTED_SEPARATION * self.delta
    }

    /// `Phi_i(omega)` for a unit vector `omega`.
    pub fn weight(&self, i: usize, omega: &[f64]) -> f64 {
        match self.layout {
            Layout::Arcs { arc, overlap } => {
                let phi = arc_offset(&self.centers[i], omega);
                arc_profile(phi, arc, overlap).0
            }
            Layout::Caps { radius, .. } => {
                let own = cap_bump(&self.centers[i], radius, omega).0;
                if own == 0.0 {
                    return 0.0;
                }
                own / self.bump_sum(radius, omega).0
            }
        }
    }

    /// Tangential gradient of `Phi_i` at `omega`.
    pub fn gradient(&self, i: usize, omega: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.layout {
            Layout::Arcs { arc, overlap } => {
                let phi = arc_offset(&self.centers[i], omega);
                let slope = arc_profile(phi, arc, overlap).1;
                // d theta along the circle is the rotated omega.
                out[0] = -slope * omega[1];
                out[1] = slope * omega[0];
            }
            Layout::Caps { radius, .. } => {
                let (own, own_grad) = cap_bump(&self.centers[i], radius, omega);
                if own == 0.0 && own_grad.iter().all(|v| *v == 0.0) {
                    return;
                }
                let (sum, sum_grad) = self.bump_sum(radius, omega);
                for k in 0..3 {
                    out[k] = own_grad[k] / sum - own * sum_grad[k] / (sum * sum);
                }
            }
        }
    }

    fn bump_sum(&self, radius: f64, omega: &[f64]) -> (f64, [f64; 3]) {
        let mut sum = 0.0;
        let mut grad = [0.0; 3];
        for c in &self.centers {
            let (b, g) = cap_bump(c, radius, omega);
            sum += b;
            for k in 0..3 {
                grad[k] += g[k];
            }
        }
        (sum, grad)
    }

    /// Piece `i` as an angular weight for truncated kernels.
    pub fn piece(&self, i: usize) -> Piece<'_> {
        Piece {
            partition: self,
            index: i,
        }
    }

    /// Number of cap sequences of length `m` in which neighbours are aligned.
    pub fn directed_count(&self, m: usize) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let k = self.len();
        let mut ways = vec![1.0; k];
        for _ in 1..m {
            ways = (0..k)
                .map(|i| (0..k).filter(|&j| self.aligned(i, j)).map(|j| ways[j]).sum())
                .collect();
        }
        ways.iter().sum()
    }
}

/// Offset of `omega` from the arc midpoint, in `[-pi, pi)`.
fn arc_offset(center: &[f64], omega: &[f64]) -> f64 {
    wrap(omega[1].atan2(omega[0]) - center[1].atan2(center[0]))
}

/// Arc profile and its angular derivative at offset `phi` from the midpoint.
fn arc_profile(phi: f64, arc: f64, overlap: f64) -> (f64, f64) {
    let rise = (phi + 0.5 * arc + 0.5 * overlap) / overlap;
    let fall = (phi - 0.5 * arc + 0.5 * overlap) / overlap;
    let (a, da) = (smoothstep(rise), smoothstep_derivative(rise) / overlap);
    let (b, db) = (1.0 - smoothstep(fall), -smoothstep_derivative(fall) / overlap);
    (a * b, da * b + a * db)
}

/// Unnormalized spherical bump and its tangential gradient.
fn cap_bump(center: &[f64], radius: f64, omega: &[f64]) -> (f64, [f64; 3]) {
    let c: f64 = center.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
    let angle = c.acos();
    if angle >= radius {
        return (0.0, [0.0; 3]);
    }
    let t = angle / radius;
    let value = 1.0 - smoothstep(t);
    let slope = -smoothstep_derivative(t) / radius;
    let sin = (1.0 - c * c).sqrt();
    let mut grad = [0.0; 3];
    if slope != 0.0 && sin > 1e-14 {
        for k in 0..3 {
            grad[k] = -slope * (center[k] - c * omega[k]) / sin;
        }
    }
    (value, grad)
}

/// One piece of a partition viewed as an angular weight.
#[derive(Clone, Copy, Debug)]
pub struct Piece<'a> {
    pub partition: &'a SpherePartition,
    pub index: usize,
}

impl AngularWeight for Piece<'_> {
    fn weight(&self, omega: &[f64]) -> f64 {
        self.partition.weight(self.index, omega)
    }

    fn tangential_gradient(&self, omega: &[f64], out: &mut [f64]) {
        self.partition.gradient(self.index, omega, out)
    }
}

/// The constant weight 1: no angular truncation.
#[derive(Clone, Copy, Debug, Default)]
pub struct FullSphere;

impl AngularWeight for FullSphere {
    fn weight(&self, _omega: &[f64]) -> f64 {
        1.0
    }

    fn tangential_gradient(&self, _omega: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}
