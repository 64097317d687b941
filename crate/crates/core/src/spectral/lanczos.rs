//! Thick-restart Lanczos for the largest eigenpairs of a symmetric operator.
//!
//! The basis is kept fully orthogonal (two passes of classical Gram–Schmidt),
//! so the projected matrix is formed from the actual inner products rather
//! than the three-term recurrence. On restart the leading Ritz vectors and the
//! current residual direction are kept; the residual couplings land in the
//! projected matrix automatically because every new column is projected on the
//! whole basis.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::SymOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Largest basis before a restart.
    pub max_basis: usize,
    /// Ritz vectors kept beyond the `m` wanted on restart.
    pub extra_kept: usize,
    /// Relative residual target `||A x - theta x|| <= tol * max(1, |theta|)`.
    pub tol: f64,
    pub max_matvecs: usize,
    /// Matvecs between convergence checks.
    pub check_every: usize,
    /// Seed of the random start (and of the perturbation added to warm starts).
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_basis: 90, extra_kept: 20, tol: 1e-11, max_matvecs: 20_000, check_every: 6, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOutput {
    /// Descending Ritz values.
    pub values: Vec<f64>,
    /// Unit Ritz vectors matching `values`.
    pub vectors: Vec<Vec<f64>>,
    /// Explicit residual norms.
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthogonalizes `w` against `basis` twice and returns the accumulated
/// coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = dot(v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coeffs
}

fn start_vector(n: usize, warm: Option<&[Vec<f64>]>, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nn = norm(&noise);
    noise.iter_mut().for_each(|x| *x /= nn);
    match warm {
        Some(ws) if !ws.is_empty() => {
            let mut v = vec![0.0; n];
            for w in ws {
                assert_eq!(w.len(), n, "warm start length");
                let wn = norm(w).max(f64::MIN_POSITIVE);
                axpy(1.0 / wn, w, &mut v);
            }
            // a little noise keeps the start from being exactly deficient
            axpy(1e-6 * norm(&v).max(1.0), &noise, &mut v);
            let vn = norm(&v);
            v.iter_mut().for_each(|x| *x /= vn);
            v
        }
        _ => noise,
    }
}

/// Sorted-descending eigen-decomposition of a small symmetric matrix.
fn ritz(t: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(t.clone());
    let mut idx: Vec<usize> = (0..t.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(t.nrows(), t.nrows(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for (c, v) in coeffs.zip(basis) {
        axpy(c, v, &mut out);
    }
    out
}

/// Largest `m` eigenpairs of `op`.
pub fn lanczos_top<A: SymOperator + ?Sized>(
    op: &A,
    m: usize,
    warm: Option<&[Vec<f64>]>,
    opts: &LanczosOptions,
) -> Result<LanczosOutput> {
    let n = op.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("requested {m} eigenpairs of a {n}x{n} operator")));
    }
    let max_basis = opts.max_basis.max(m + opts.extra_kept + 2).min(n);
    let keep_target = (m + opts.extra_kept).min(max_basis.saturating_sub(2)).max(m);

    let mut basis: Vec<Vec<f64>> = vec![start_vector(n, warm, opts.seed)];
    let mut t = DMatrix::<f64>::zeros(max_basis, max_basis);
    let mut done = 0usize; // basis vectors whose image has been computed
    let mut matvecs = 0usize;
    let mut w = vec![0.0; n];
    let mut since_check = 0usize;
    let mut last_residual = f64::INFINITY;

    loop {
        // expand by one matvec
        op.apply(&basis[done], &mut w);
        matvecs += 1;
        since_check += 1;
        let coeffs = orthogonalize(&basis, &mut w);
        for (i, &c) in coeffs.iter().enumerate().take(done + 1) {
            t[(i, done)] = c;
            t[(done, i)] = c;
        }
        let beta = norm(&w);
        done += 1;

        let scale = (0..done).map(|i| t[(i, i)].abs()).fold(1.0, f64::max);
        let exhausted = beta <= 1e-13 * scale || done == n;
        let full = done == max_basis;
        let time_to_check = since_check >= opts.check_every && done > m;

        if exhausted || full || time_to_check {
            since_check = 0;
            let tk = t.view((0, 0), (done, done)).into_owned();
            let (theta, y) = ritz(&tk);
            let est = |c: usize| if exhausted { 0.0 } else { beta * y[(done - 1, c)].abs() };
            let converged = (0..m).all(|c| est(c) <= opts.tol * theta[c].abs().max(1.0));
            last_residual = (0..m).map(est).fold(0.0, f64::max);

            if converged || exhausted {
                let mut values = Vec::with_capacity(m);
                let mut vectors = Vec::with_capacity(m);
                let mut residuals = Vec::with_capacity(m);
                let mut ax = vec![0.0; n];
                for c in 0..m {
                    let mut x = combine(&basis[..done], y.column(c).iter().copied());
                    let xn = norm(&x);
                    x.iter_mut().for_each(|v| *v /= xn);
                    op.apply(&x, &mut ax);
                    let rq = dot(&x, &ax);
                    axpy(-rq, &x, &mut ax);
                    residuals.push(norm(&ax));
                    values.push(rq);
                    vectors.push(x);
                }
                let ok = residuals
                    .iter()
                    .zip(&values)
                    .all(|(r, v)| *r <= 100.0 * opts.tol * v.abs().max(1.0));
                if ok {
                    return Ok(LanczosOutput { values, vectors, residuals, matvecs: matvecs + m });
                }
                if exhausted {
                    return Err(Error::NoConvergence { iterations: matvecs, residual: last_residual });
                }
                // estimate was optimistic; keep iterating
            }

            if matvecs >= opts.max_matvecs {
                return Err(Error::NoConvergence { iterations: matvecs, residual: last_residual });
            }

            if full {
                let keep = keep_target.min(done - 1);
                let kept: Vec<Vec<f64>> =
                    (0..keep).map(|c| combine(&basis[..done], y.column(c).iter().copied())).collect();
                let mut next = w.clone();
                next.iter_mut().for_each(|v| *v /= beta);
                t.fill(0.0);
                for c in 0..keep {
                    t[(c, c)] = theta[c];
                }
                basis = kept;
                // re-orthogonalize the residual direction against the kept block
                orthogonalize(&basis, &mut next);
                let nn = norm(&next);
                next.iter_mut().for_each(|v| *v /= nn);
                basis.push(next);
                done = keep;
                continue;
            }
        }

        if matvecs >= opts.max_matvecs {
            return Err(Error::NoConvergence { iterations: matvecs, residual: last_residual });
        }
        let mut next = w.clone();
        next.iter_mut().for_each(|v| *v /= beta);
        basis.push(next);
    }
}
