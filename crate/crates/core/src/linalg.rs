//! Vector kernels, iterative solvers and dense factorizations.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::fields::operator::LinearOperator;
use crate::{Error, Result, C64, ZERO};

/// Relative tolerance for operator-norm power iterations.
pub const NORM_TOL: f64 = 1e-6;
/// Iteration cap for operator-norm power iterations.
pub const NORM_MAX_ITER: usize = 10_000;

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a, b> = sum conj(a_i) b_i`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(v: &mut [C64], s: f64) {
    v.iter_mut().for_each(|z| *z *= s);
}

/// Deterministic start vector: all ones plus a small aperiodic ripple.
///
/// Pure all-ones vectors are exactly orthogonal to the dominant singular
/// vector of parity-odd operators; the ripple breaks every such symmetry.
pub fn start_vector(dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|i| {
            let t = i as f64;
            C64::new(1.0 + 0.3 * (0.7548776662 * t).sin(), 0.2 * (0.5698402910 * t).cos())
        })
        .collect();
    let n = norm2(&v);
    scale(&mut v, 1.0 / n);
    v
}

/// Result of a power iteration.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Relative change of the estimate in the last step.
    pub residual: f64,
    /// Final right singular vector approximation (unit length).
    pub vector: Vec<C64>,
}

/// Largest singular value by power iteration on `A^* A`.
///
/// Starts from `start` when given (restricted to the support of interest by
/// the caller) and from [`start_vector`] otherwise.
pub fn power_norm(
    op: &dyn LinearOperator,
    start: Option<&[C64]>,
    tol: f64,
    max_iter: usize,
) -> Result<NormEstimate> {
    power_norm_above(op, start, tol, max_iter, 0.0)
}

/// [`power_norm`] that stops early once `|Av|` sits below `floor`.
///
/// Blocks whose true norm is under the rounding level of the surrounding
/// computation never settle; callers pass a floor proportional to the
/// size of the operator they came from.
pub fn power_norm_above(
    op: &dyn LinearOperator,
    start: Option<&[C64]>,
    tol: f64,
    max_iter: usize,
    floor: f64,
) -> Result<NormEstimate> {
    let dim = op.dim();
    let mut v = match start {
        Some(s) => s.to_vec(),
        None => start_vector(dim),
    };
    let nv = norm2(&v);
    if nv == 0.0 {
        return Ok(NormEstimate {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
            vector: v,
        });
    }
    scale(&mut v, 1.0 / nv);
    let mut av = vec![ZERO; dim];
    let mut w = vec![ZERO; dim];
    let mut estimate = 0.0;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        op.apply(&v, &mut av);
        let sigma = norm2(&av);
        if sigma == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                iterations: it,
                residual: 0.0,
                vector: v,
            });
        }
        op.apply_adjoint(&av, &mut w);
        let nw = norm2(&w);
        // sqrt(|A^*A v|) bounds sigma from above in the limit; |Av| from below.
        change = (sigma - estimate).abs() / sigma;
        estimate = sigma;
        std::mem::swap(&mut v, &mut w);
        scale(&mut v, 1.0 / nw);
        if (change < tol || sigma < floor) && it > 2 {
            return Ok(NormEstimate {
                value: estimate,
                iterations: it,
                residual: change,
                vector: v,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        estimate,
        residual: change,
    })
}

/// Operator norm with the default tolerance and iteration cap.
pub fn operator_norm(op: &dyn LinearOperator) -> Result<f64> {
    Ok(power_norm(op, None, NORM_TOL, NORM_MAX_ITER)?.value)
}

/// Spectral norm of a small row-major square matrix.
pub fn small_spectral_norm(block: &[C64], s: usize) -> f64 {
    if s == 1 {
        return block[0].norm();
    }
    let m = Mat::<C64>::from_fn(s, s, |i, j| block[i * s + j]);
    m.singular_values()
        .map(|v| v.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Materialize an operator by applying it to unit vectors.
pub fn to_dense(op: &dyn LinearOperator) -> Result<Mat<C64>> {
    let dim = op.dim();
    crate::fields::assemble::check_memcap(dim)?;
    let mut m = Mat::<C64>::zeros(dim, dim);
    let mut e = vec![ZERO; dim];
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        e[j] = ZERO;
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// Singular values of a dense matrix in non-increasing order.
pub fn singular_values(m: &Mat<C64>) -> Result<Vec<f64>> {
    let mut s = m
        .singular_values()
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Dense LU with partial pivoting.
pub struct DenseLu {
    lu: PartialPivLu<C64>,
    dim: usize,
}

impl DenseLu {
    pub fn new(m: &Mat<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Factorization("matrix is not square".into()));
        }
        Ok(Self {
            lu: m.partial_piv_lu(),
            dim: m.nrows(),
        })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = Mat::<C64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let mut x = Mat::<C64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_adjoint_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    /// Solve for many right-hand sides at once.
    pub fn solve_matrix(&self, b: &mut Mat<C64>) {
        self.lu.solve_in_place(b.as_mut());
    }
}

/// Outcome of a GMRES solve.
#[derive(Clone, Debug)]
pub struct GmresInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Restarted GMRES for `A x = b` with zero initial guess.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<C64>, GmresInfo)> {
    gmres_with(|x, y| op.apply(x, y), op.dim(), b, tol, restart, max_iter)
}

/// Restarted GMRES for `A^* x = b`.
pub fn gmres_adjoint(
    op: &dyn LinearOperator,
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<C64>, GmresInfo)> {
    gmres_with(|x, y| op.apply_adjoint(x, y), op.dim(), b, tol, restart, max_iter)
}

fn gmres_with<F: Fn(&[C64], &mut [C64])>(
    apply: F,
    dim: usize,
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<C64>, GmresInfo)> {
    let bnorm = norm2(b);
    let mut x = vec![ZERO; dim];
    if bnorm == 0.0 {
        return Ok((
            x,
            GmresInfo {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut total = 0;
    let mut r = b.to_vec();
    let mut rel = 1.0;
    let mut ax = vec![ZERO; dim];
    while total < max_iter {
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(restart + 1);
        let mut v0 = r.clone();
        scale(&mut v0, 1.0 / beta);
        basis.push(v0);
        // Hessenberg matrix reduced on the fly by Givens rotations.
        let mut hess: Vec<Vec<C64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut k = 0;
        while k < restart && total < max_iter {
            let mut w = vec![ZERO; dim];
            apply(&basis[k], &mut w);
            let mut col = vec![ZERO; k + 2];
            // Modified Gram-Schmidt, twice for stability.
            for _ in 0..2 {
                for (i, vi) in basis.iter().enumerate() {
                    let hij = dot(vi, &w);
                    col[i] += hij;
                    axpy(-hij, vi, &mut w);
                }
            }
            let wn = norm2(&w);
            col[k + 1] = C64::new(wn, 0.0);
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = ZERO;
            cs.push(c);
            sn.push(s);
            let gk = g[k];
            g.push(-s.conj() * gk);
            g[k] = c * gk;
            hess.push(col);
            total += 1;
            k += 1;
            if wn > 0.0 {
                scale(&mut w, 1.0 / wn);
            }
            basis.push(w);
            rel = g[k].norm() / bnorm;
            if rel <= tol || wn == 0.0 {
                break;
            }
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &basis[i], &mut x);
        }
        apply(&x, &mut ax);
        for i in 0..dim {
            r[i] = b[i] - ax[i];
        }
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            break;
        }
    }
    if rel > tol {
        return Err(Error::NonConvergence {
            iterations: total,
            estimate: f64::NAN,
            residual: rel,
        });
    }
    Ok((
        x,
        GmresInfo {
            iterations: total,
            relative_residual: rel,
        },
    ))
}

/// Complex Givens rotation zeroing `b` in `(a, b)`: returns real `c` and complex `s`
/// with `[c, s; -conj(s), c] [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = (an * an + bn * bn).sqrt();
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Ritz pair from a Lanczos run.
#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<C64>,
    /// `beta_k |s_k|`, a bound on `|A v - value v|`.
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Smallest eigenvalue of a Hermitian operator by Lanczos with full
/// reorthogonalization.
///
/// Stops once the residual bound falls below `tol` (absolute) or after
/// `max_steps`; in the latter case the returned Ritz value is still an upper
/// bound for the smallest eigenvalue.
pub fn lanczos_smallest<F: Fn(&[C64], &mut [C64])>(
    apply: F,
    dim: usize,
    max_steps: usize,
    tol: f64,
) -> Result<RitzPair> {
    let max_steps = max_steps.min(dim).max(1);
    let mut basis: Vec<Vec<C64>> = vec![start_vector(dim)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for j in 0..max_steps {
        apply(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w).re;
        alphas.push(alpha);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm2(&w);
        let k = j + 1;
        let check = k == max_steps || beta < 1e-13 || k % 4 == 0 || k < 4;
        if check {
            let (theta, s) = tridiagonal_smallest(&alphas, &betas)?;
            let residual = beta * s[k - 1].abs();
            best = Some((theta, s, residual));
            if residual <= tol || beta < 1e-13 {
                break;
            }
        }
        if k == max_steps {
            break;
        }
        betas.push(beta);
        let mut next = w.clone();
        scale(&mut next, 1.0 / beta);
        basis.push(next);
    }
    let (value, s, residual) = best.expect("at least one Lanczos step");
    let mut vector = vec![ZERO; dim];
    for (coef, q) in s.iter().zip(&basis) {
        axpy(C64::new(*coef, 0.0), q, &mut vector);
    }
    let nv = norm2(&vector);
    if nv > 0.0 {
        scale(&mut vector, 1.0 / nv);
    }
    Ok(RitzPair {
        value,
        vector,
        residual,
        steps: s.len(),
        converged: residual <= tol,
    })
}

fn tridiagonal_smallest(alphas: &[f64], betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = alphas.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let eig = t
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let vals = eig.S();
    let vecs = eig.U();
    let mut idx = 0;
    for i in 1..k {
        if vals[i] < vals[idx] {
            idx = i;
        }
    }
    Ok((vals[idx], (0..k).map(|i| vecs[(i, idx)]).collect()))
}

/// Smallest singular value of `A` via Lanczos on `A^* A`.
pub fn smallest_singular_value(op: &dyn LinearOperator, max_steps: usize) -> Result<RitzPair> {
    let dim = op.dim();
    let pair = lanczos_smallest(
        |x, y| {
            let ax = op.apply_vec(x);
            op.apply_adjoint(&ax, y);
        },
        dim,
        max_steps,
        1e-12,
    )?;
    Ok(RitzPair {
        value: pair.value.max(0.0).sqrt(),
        ..pair
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::operator::DenseOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> Mat<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn power_iteration_matches_svd() {
        let m = random_matrix(50, 7);
        let svd = singular_values(&m).unwrap()[0];
        let op = DenseOperator(m);
        let est = operator_norm(&op).unwrap();
        assert!((est - svd).abs() / svd < 1e-5, "{est} vs {svd}");
    }

    #[test]
    fn lanczos_smallest_singular_value_matches_svd() {
        let mut m = random_matrix(60, 11);
        for i in 0..60 {
            m[(i, i)] += C64::new(1.0, 0.0);
        }
        let svd = *singular_values(&m).unwrap().last().unwrap();
        let op = DenseOperator(m);
        let pair = smallest_singular_value(&op, 60).unwrap();
        assert!((pair.value - svd).abs() < 1e-6 * (1.0 + svd), "{} vs {svd}", pair.value);
    }

    #[test]
    fn gmres_solves_dense_system() {
        let mut m = random_matrix(40, 3);
        for i in 0..40 {
            m[(i, i)] += C64::new(6.0, 0.0);
        }
        let b: Vec<C64> = (0..40).map(|i| C64::new(i as f64, 1.0)).collect();
        let lu = DenseLu::new(&m).unwrap();
        let want = lu.solve(&b);
        let op = DenseOperator(m);
        let (x, info) = gmres(&op, &b, 1e-12, 15, 500).unwrap();
        let err: f64 = x.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}, {info:?}");
        let (xa, _) = gmres_adjoint(&op, &b, 1e-12, 15, 500).unwrap();
        let wa = lu.solve_adjoint(&b);
        let err: f64 = xa.iter().zip(&wa).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }
}
