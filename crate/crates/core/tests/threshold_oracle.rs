//! Threshold kernels against symbolically differentiated values in
//! `data/threshold_oracle.txt` (regenerate with `data/gen_threshold.py`).

use dirac_lap::clifford::DiracMatrices;
use dirac_lap::fields::Grid;
use dirac_lap::lap::threshold_operator;
use dirac_lap::C64;

fn rows() -> Vec<Vec<f64>> {
    include_str!("data/threshold_oracle.txt")
        .lines()
        .map(|l| l.split_whitespace().skip(1).map(|t| t.parse().unwrap()).collect())
        .collect()
}

fn check(n: usize, m: f64, row: &[f64]) {
    let grid = Grid::new(n, 2.0, 8, false).unwrap();
    let mats = DiracMatrices::new(n).unwrap();
    let g = threshold_operator(&mats, m, &grid).unwrap();
    let h = grid.spacing();
    let s = mats.spinor_dim();
    let centre = [4usize; 3];
    let mut shifted = centre;
    for k in 0..n {
        shifted[k] = (centre[k] as i64 + (row[k] / h).round() as i64) as usize;
    }
    let p = grid.flat_index(&shifted[..n]);
    let q = grid.flat_index(&centre[..n]);
    let coef: Vec<C64> = (0..n).map(|k| C64::new(row[n + 2 * k], row[n + 2 * k + 1])).collect();
    let mut want = vec![C64::new(0.0, 0.0); s * s];
    for k in 0..n {
        let a = mats.alpha(k);
        for i in 0..s {
            for j in 0..s {
                want[i * s + j] += coef[k] * a[(i, j)];
            }
        }
    }
    if n == 3 {
        let g0 = row[3 * n];
        let beta = mats.beta();
        for i in 0..s {
            for j in 0..s {
                want[i * s + j] += m * g0 * beta[(i, j)];
            }
            want[i * s + i] += m * g0;
        }
    }
    let vol = grid.cell_volume();
    let block = g.block(p, q);
    for (got, w) in block.iter().zip(&want) {
        assert!((got - w * vol).norm() < 1e-15, "n = {n}, {row:?}: {got} vs {}", w * vol);
    }
}

#[test]
fn massless_planar_kernel() {
    for row in rows().iter().filter(|r| r.len() == 6) {
        check(2, 0.0, row);
    }
}

#[test]
fn spatial_kernel_with_and_without_mass() {
    for row in rows().iter().filter(|r| r.len() == 10) {
        check(3, 0.0, row);
        check(3, 1.0, row);
    }
}
