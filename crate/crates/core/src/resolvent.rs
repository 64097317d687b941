//! Resolvent probes `R(z) = (H - z)^{-1}` at edge scale.
//!
//! Below the dense cap every quantity comes from the full eigendecomposition;
//! above it, individual columns are obtained by conjugate orthogonal
//! conjugate gradients on the complex-symmetric system `(H - z) x = e_j`
//! followed by iterative refinement.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::edge_model::{m_star, EdgeModel};
use crate::error::{Error, Result};
use crate::matrix::SymOperator;
use crate::spectral::{dense_decomposition, DenseSpectrum};

/// Default edge-window exponent.
pub const DEFAULT_DELTA: f64 = 0.05;

/// Number of energies sampled across the edge window.
pub const WINDOW_POINTS: usize = 17;

/// Requested resolvent entries at one spectral parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventProbe {
    pub z: Complex64,
    pub pairs: Vec<(usize, usize)>,
    pub values: Vec<Complex64>,
    /// Normalized trace, when available.
    pub m: Option<Complex64>,
    /// Full rows `R_i.` for every index appearing in `pairs`.
    pub rows: Vec<(usize, Vec<Complex64>)>,
}

impl ResolventProbe {
    pub fn row(&self, i: usize) -> Option<&[Complex64]> {
        self.rows.iter().find(|(r, _)| *r == i).map(|(_, v)| v.as_slice())
    }

    pub fn value(&self, i: usize, j: usize) -> Option<Complex64> {
        self.pairs.iter().position(|&p| p == (i, j)).map(|p| self.values[p])
    }
}

fn check_z(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::NonPositiveImaginary(z.im));
    }
    Ok(())
}

fn touched_rows(n: usize, pairs: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut set = BTreeSet::new();
    for &(i, j) in pairs {
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
            set.insert(idx);
        }
    }
    Ok(set.into_iter().collect())
}

/// Row `i` of `R(z)` from a dense decomposition.
pub fn spectral_row(spec: &DenseSpectrum, z: Complex64, i: usize) -> Vec<Complex64> {
    let n = spec.values.len();
    let coef: Vec<Complex64> = spec
        .values
        .iter()
        .enumerate()
        .map(|(p, &lam)| spec.vectors[(i, p)] / (lam - z))
        .collect();
    (0..n)
        .map(|l| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, c) in coef.iter().enumerate() {
                acc += c * spec.vectors[(l, p)];
            }
            acc
        })
        .collect()
}

/// `m(z)` from eigenvalues.
pub fn stieltjes_from_values(values: &[f64], z: Complex64) -> Complex64 {
    let n = values.len() as f64;
    values.iter().map(|&l| 1.0 / (l - z)).sum::<Complex64>() / n
}

/// Probe from a precomputed dense decomposition.
pub fn probe_dense(spec: &DenseSpectrum, z: Complex64, pairs: &[(usize, usize)]) -> Result<ResolventProbe> {
    check_z(z)?;
    let n = spec.values.len();
    let rows: Vec<(usize, Vec<Complex64>)> =
        touched_rows(n, pairs)?.into_iter().map(|i| (i, spectral_row(spec, z, i))).collect();
    let find = |i: usize| &rows.iter().find(|(r, _)| *r == i).expect("row computed").1;
    let values = pairs.iter().map(|&(i, j)| find(i)[j]).collect();
    Ok(ResolventProbe { z, pairs: pairs.to_vec(), values, m: Some(stieltjes_from_values(&spec.values, z)), rows })
}

/// Resolvent entries of `op` at `z`.
///
/// Uses the dense path when `n <= dense_cap`, otherwise one shifted solve per
/// touched row; on the iterative path `m` is filled only when every diagonal
/// entry was requested.
pub fn probe<A: SymOperator + ?Sized>(
    op: &A,
    z: Complex64,
    pairs: &[(usize, usize)],
    dense_cap: usize,
) -> Result<ResolventProbe> {
    check_z(z)?;
    let n = op.dim();
    if n <= dense_cap {
        let spec = dense_decomposition(op, dense_cap)?;
        return probe_dense(&spec, z, pairs);
    }
    let rows: Vec<(usize, Vec<Complex64>)> = touched_rows(n, pairs)?
        .into_iter()
        .map(|i| shifted_solve(op, z, i).map(|x| (i, x)))
        .collect::<Result<_>>()?;
    let find = |i: usize| &rows.iter().find(|(r, _)| *r == i).expect("row computed").1;
    let values: Vec<Complex64> = pairs.iter().map(|&(i, j)| find(i)[j]).collect();
    let diag: BTreeSet<usize> = pairs.iter().filter(|(i, j)| i == j).map(|p| p.0).collect();
    let m = (diag.len() == n).then(|| (0..n).map(|i| find(i)[i]).sum::<Complex64>() / n as f64);
    Ok(ResolventProbe { z, pairs: pairs.to_vec(), values, m, rows })
}

fn apply_shifted<A: SymOperator + ?Sized>(op: &A, z: Complex64, x: &[Complex64], re: &mut [f64], im: &mut [f64], out: &mut [Complex64]) {
    let xr: Vec<f64> = x.iter().map(|c| c.re).collect();
    let xi: Vec<f64> = x.iter().map(|c| c.im).collect();
    op.apply(&xr, re);
    op.apply(&xi, im);
    for (k, o) in out.iter_mut().enumerate() {
        *o = Complex64::new(re[k], im[k]) - z * x[k];
    }
}

/// Unconjugated bilinear form used by COCG.
fn bdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn cocg<A: SymOperator + ?Sized>(op: &A, z: Complex64, b: &[Complex64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let n = b.len();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    let bn = cnorm(b).max(f64::MIN_POSITIVE);
    let mut rho = bdot(&r, &r);
    for _ in 0..max_iter {
        if cnorm(&r) <= tol * bn {
            return Ok(x);
        }
        apply_shifted(op, z, &p, &mut re, &mut im, &mut ap);
        let denom = bdot(&p, &ap);
        if denom.norm() == 0.0 || rho.norm() == 0.0 {
            return Err(Error::SolverBreakdown("vanishing bilinear form in COCG".into()));
        }
        let alpha = rho / denom;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rho_next = bdot(&r, &r);
        let beta = rho_next / rho;
        rho = rho_next;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    if cnorm(&r) <= tol * bn {
        Ok(x)
    } else {
        Err(Error::SolverBreakdown(format!("COCG stalled at relative residual {:.3e}", cnorm(&r) / bn)))
    }
}

/// Column `j` of `R(z)`, with refinement until `||(H - z) x - e_j|| <= 1e-10`.
pub fn shifted_solve<A: SymOperator + ?Sized>(op: &A, z: Complex64, j: usize) -> Result<Vec<Complex64>> {
    check_z(z)?;
    let n = op.dim();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    b[j] = Complex64::new(1.0, 0.0);
    let max_iter = 20 * n + 1000;
    let mut x = cocg(op, z, &b, 1e-11, max_iter)?;
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..5 {
        apply_shifted(op, z, &x, &mut re, &mut im, &mut ax);
        let resid: Vec<Complex64> = b.iter().zip(&ax).map(|(bb, a)| bb - a).collect();
        if cnorm(&resid) <= 1e-10 {
            return Ok(x);
        }
        let dx = cocg(op, z, &resid, 1e-11, max_iter)?;
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
    }
    apply_shifted(op, z, &x, &mut re, &mut im, &mut ax);
    let res = b.iter().zip(&ax).map(|(bb, a)| (bb - a).norm_sqr()).sum::<f64>().sqrt();
    if res <= 1e-9 {
        Ok(x)
    } else {
        Err(Error::SolverBreakdown(format!("refinement stalled at residual {res:.3e}")))
    }
}

/// Largest relative violation of `sum_l R_il conj(R_jl) = Im R_ij / Im z`
/// over the probed pairs.
///
/// The scale is `max(|Im R_ij|, sqrt(Im R_ii Im R_jj)) / Im z`, which bounds
/// both sides by Cauchy-Schwarz and stays meaningful when `Im R_ij` vanishes.
pub fn ward_check(probe: &ResolventProbe) -> f64 {
    let eta = probe.z.im;
    let mut worst: f64 = 0.0;
    for &(i, j) in &probe.pairs {
        let (Some(ri), Some(rj)) = (probe.row(i), probe.row(j)) else { continue };
        let lhs: Complex64 = ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
        let rij = ri[j];
        let rhs = rij.im / eta;
        let scale = rij.im.abs().max((ri[i].im * rj[j].im).abs().sqrt()) / eta;
        let resid = (lhs - Complex64::new(rhs, 0.0)).norm() / (scale + 1e-30);
        worst = worst.max(resid);
    }
    worst
}

/// One point of a residual map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridResidual {
    pub kappa: f64,
    pub eta: f64,
    pub residual: f64,
    pub bound: f64,
}

/// `kappa,eta,residual,bound` rows.
pub fn grid_csv(rows: &[GridResidual]) -> String {
    let mut out = String::from("kappa,eta,residual,bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.kappa, r.eta, r.residual, r.bound);
    }
    out
}

/// Local-law error bound `1/(N eta) + 1/q^3 + (|kappa| + eta)^{1/4} (1/(N eta) + 1/q^3)^{1/2}`.
pub fn local_law_bound(n: usize, q: f64, kappa: f64, eta: f64) -> f64 {
    let base = 1.0 / (n as f64 * eta) + q.powi(-3);
    base + (kappa.abs() + eta).powf(0.25) * base.sqrt()
}

/// `|m(L + w) - m_*(L + w)|` over a grid of `w = kappa + i eta`, with `L` the
/// model's edge and `m` built from the supplied eigenvalues.
pub fn local_law_residual(values: &[f64], model: &EdgeModel, grid: &[Complex64]) -> Result<Vec<GridResidual>> {
    let edge = crate::edge_model::edge_location(model);
    let n = values.len();
    grid.iter()
        .map(|w| {
            let z = Complex64::new(edge + w.re, w.im);
            let m = stieltjes_from_values(values, z);
            let ms = m_star(z, model)?;
            Ok(GridResidual { kappa: w.re, eta: w.im, residual: (m - ms).norm(), bound: local_law_bound(n, model.q, w.re, w.im) })
        })
        .collect()
}

/// Energies and height of the edge window `|E - L| <= N^{-2/3+delta}`,
/// `eta = N^{-2/3-delta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWindow {
    pub energies: Vec<f64>,
    pub eta: f64,
}

impl EdgeWindow {
    pub fn new(n: usize, edge: f64, delta: f64) -> Self {
        let nf = n as f64;
        let half = nf.powf(-2.0 / 3.0 + delta);
        let energies = (0..WINDOW_POINTS)
            .map(|p| edge - half + 2.0 * half * p as f64 / (WINDOW_POINTS - 1) as f64)
            .collect();
        Self { energies, eta: nf.powf(-2.0 / 3.0 - delta) }
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.energies.iter().map(move |&e| Complex64::new(e, self.eta))
    }
}

/// Eigenvectors as rows, ready for weighted Gram products.
pub struct RowBasis {
    pub values: Vec<f64>,
    /// Row `p` is eigenvector `p`.
    pub rows: DMatrix<f64>,
}

impl From<&DenseSpectrum> for RowBasis {
    fn from(spec: &DenseSpectrum) -> Self {
        Self { values: spec.values.clone(), rows: spec.vectors.transpose() }
    }
}

impl RowBasis {
    /// `sum_p w_p v_p v_p^T`, accumulated into `out` with factor `alpha`.
    fn gram_into(&self, weights: &[f64], alpha: f64, out: &mut DMatrix<f64>) {
        let mut scaled = self.rows.clone();
        for (p, w) in weights.iter().enumerate() {
            scaled.row_mut(p).scale_mut(*w);
        }
        out.gemm_tr(alpha, &self.rows, &scaled, 1.0);
    }

    /// `sum_{lo <= p < hi} w_p v_p v_p^T`, accumulated into `out` with factor `alpha`.
    fn gram_range(&self, lo: usize, hi: usize, weights: &[f64], alpha: f64, out: &mut DMatrix<f64>) {
        if lo >= hi {
            return;
        }
        let rows = self.rows.rows(lo, hi - lo);
        let mut scaled = rows.clone_owned();
        for p in lo..hi {
            scaled.row_mut(p - lo).scale_mut(weights[p]);
        }
        out.gemm_tr(alpha, &rows, &scaled, 1.0);
    }

    /// `Im R(E + i eta)`.
    pub fn im_resolvent(&self, e: f64, eta: f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut out = DMatrix::zeros(n, n);
        self.gram_into(&im_weights(&self.values, e, eta), 1.0, &mut out);
        out
    }
}

fn im_weights(values: &[f64], e: f64, eta: f64) -> Vec<f64> {
    values.iter().map(|&l| eta / ((l - e).powi(2) + eta * eta)).collect()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Normalized entrywise statistics of `R` over a set of spectral parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryLawStats {
    /// `max ||R_ij| - delta_ij|`.
    pub max_abs_dev: f64,
    /// `max |Im R_ij|`.
    pub max_im: f64,
    /// `max_abs_dev / (1/q + 1/(N eta))`, maximized over the grid.
    pub abs_dev_normalized: f64,
    /// `max_im * N eta`, maximized over the grid.
    pub im_normalized: f64,
    /// Mean and spread of off-diagonal `Im R_ij`, and mean diagonal `Im R_ii`,
    /// at the first grid point.
    pub offdiag_im_mean: f64,
    pub offdiag_im_sd: f64,
    pub diag_im_mean: f64,
}

/// Entry statistics of the resolvent over `points`.
pub fn entry_law_residual(spec: &DenseSpectrum, q: f64, points: &[Complex64]) -> Result<EntryLawStats> {
    let n = spec.values.len();
    let nf = n as f64;
    let mut stats = EntryLawStats {
        max_abs_dev: 0.0,
        max_im: 0.0,
        abs_dev_normalized: 0.0,
        im_normalized: 0.0,
        offdiag_im_mean: 0.0,
        offdiag_im_sd: 0.0,
        diag_im_mean: 0.0,
    };
    let rows = spec.vectors.transpose();
    for (g, &z) in points.iter().enumerate() {
        check_z(z)?;
        let inv: Vec<Complex64> = spec.values.iter().map(|&l| 1.0 / (l - z)).collect();
        let mut re_s = rows.clone();
        let mut im_s = rows.clone();
        for p in 0..n {
            re_s.row_mut(p).scale_mut(inv[p].re);
            im_s.row_mut(p).scale_mut(inv[p].im);
        }
        let mut re = DMatrix::zeros(n, n);
        let mut im = DMatrix::zeros(n, n);
        re.gemm_tr(1.0, &rows, &re_s, 0.0);
        im.gemm_tr(1.0, &rows, &im_s, 0.0);
        let mut dev: f64 = 0.0;
        let mut imax: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = Complex64::new(re[(i, j)], im[(i, j)]).norm();
                let d = if i == j { (a - 1.0).abs() } else { a };
                dev = dev.max(d);
                imax = imax.max(im[(i, j)].abs());
            }
        }
        let eta = z.im;
        stats.max_abs_dev = stats.max_abs_dev.max(dev);
        stats.max_im = stats.max_im.max(imax);
        stats.abs_dev_normalized = stats.abs_dev_normalized.max(dev / (1.0 / q + 1.0 / (nf * eta)));
        stats.im_normalized = stats.im_normalized.max(imax * nf * eta);
        if g == 0 {
            let mut off = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    off.push(im[(i, j)]);
                }
            }
            let (mean, sd) = if off.is_empty() {
                (0.0, 0.0)
            } else {
                (crate::stats::mean(&off), crate::stats::variance(&off).max(0.0).sqrt())
            };
            stats.offdiag_im_mean = mean;
            stats.offdiag_im_sd = sd;
            stats.diag_im_mean = (0..n).map(|i| im[(i, i)]).sum::<f64>() / nf;
        }
    }
    Ok(stats)
}

/// `max_ij N |eta Im R_ij(lambda_1 + i eta) - v_i v_j|` with `eta = N^{-2/3-delta}`.
pub fn eigvec_link_residual(spec: &DenseSpectrum, delta: f64) -> f64 {
    let n = spec.values.len();
    let nf = n as f64;
    let eta = nf.powf(-2.0 / 3.0 - delta);
    let l1 = spec.values[0];
    let basis = RowBasis::from(spec);
    // eta Im R = sum_p eta^2 / ((l_p - l_1)^2 + eta^2) v_p v_p^T; the p = 1 term is v v^T
    let mut weights: Vec<f64> = spec.values.iter().map(|&l| eta * eta / ((l - l1).powi(2) + eta * eta)).collect();
    weights[0] = 0.0;
    let mut out = DMatrix::zeros(n, n);
    basis.gram_into(&weights, 1.0, &mut out);
    nf * max_abs(&out)
}

/// Outcome of the resolvent detection inequality for eigenvalue `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// 1-based eigenvalue index.
    pub j: usize,
    /// 0-based coordinate maximizing `Im R_ii`.
    pub best_i: usize,
    /// `max(eta, |lambda_j - E|)^{-2}`.
    pub lhs: f64,
    /// `2 N eta^{-1} Im R_ii` at `best_i`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `max(eta, |lambda_j - E|)^{-2} <= 2 N eta^{-1} Im R_ii(E + i eta)`
/// for some `i` by scanning all diagonal entries.
pub fn detect_top_from_resolvent(spec: &DenseSpectrum, j: usize, e: f64, eta: f64) -> Result<DetectionReport> {
    let n = spec.values.len();
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    if !(eta > 0.0) {
        return Err(Error::NonPositiveImaginary(eta));
    }
    let weights = im_weights(&spec.values, e, eta);
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let im: f64 = (0..n).map(|p| spec.vectors[(i, p)].powi(2) * weights[p]).sum();
        if im > best.1 {
            best = (i, im);
        }
    }
    let lhs = eta.max((spec.values[j - 1] - e).abs()).powi(-2);
    let rhs = 2.0 * n as f64 / eta * best.1;
    Ok(DetectionReport { j, best_i: best.0, lhs, rhs, holds: lhs <= rhs })
}

/// `sup_z max_ij N eta |Im R'_ij(z) - Im R_ij(z)|` over the window energies.
pub fn resolvent_drift(a: &RowBasis, b: &RowBasis, window: &EdgeWindow) -> Result<f64> {
    let n = a.values.len();
    if b.values.len() != n {
        return Err(Error::LengthMismatch(n, b.values.len()));
    }
    let eta = window.eta;
    let mut worst: f64 = 0.0;
    let mut diff = DMatrix::zeros(n, n);
    for &e in &window.energies {
        diff.fill(0.0);
        a.gram_into(&im_weights(&a.values, e, eta), 1.0, &mut diff);
        b.gram_into(&im_weights(&b.values, e, eta), -1.0, &mut diff);
        worst = worst.max(max_abs(&diff));
    }
    Ok(n as f64 * eta * worst)
}

/// Chebyshev nodes used for the smooth part of the drift.
const BULK_NODES: usize = 5;

/// Same statistic as [`resolvent_drift`] for one base against several
/// matrices, sharing the base work.
///
/// Eigenvalues farther than ten window widths below the window are summed
/// into a bulk part that is smooth in `E`; it is evaluated exactly at five
/// Chebyshev nodes and interpolated (relative error about `(h/d)^5`). The
/// remaining edge eigenpairs are summed exactly at every energy.
pub fn resolvent_drifts(base: &RowBasis, others: &[&RowBasis], window: &EdgeWindow) -> Result<Vec<f64>> {
    let n = base.values.len();
    for o in others {
        if o.values.len() != n {
            return Err(Error::LengthMismatch(n, o.values.len()));
        }
    }
    let eta = window.eta;
    let lo = window.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * (hi - lo);
    let centre = 0.5 * (hi + lo);
    let cut = lo - 10.0 * half.max(eta);
    let edge_count = |b: &RowBasis| b.values.iter().take_while(|&&l| l > cut).count();
    let k_base = edge_count(base);
    if half == 0.0 || k_base > n / 2 || others.iter().any(|o| edge_count(o) > n / 2) {
        return others.iter().map(|o| resolvent_drift(base, o, window)).collect();
    }
    let nodes: Vec<f64> = (0..BULK_NODES)
        .map(|m| centre + half * ((2 * m + 1) as f64 * std::f64::consts::PI / (2 * BULK_NODES) as f64).cos())
        .collect();
    let lagrange = |e: f64| -> Vec<f64> {
        (0..BULK_NODES)
            .map(|m| {
                (0..BULK_NODES)
                    .filter(|&r| r != m)
                    .map(|r| (e - nodes[r]) / (nodes[m] - nodes[r]))
                    .product()
            })
            .collect()
    };
    let bulk_at = |b: &RowBasis, k: usize, e: f64| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        let mut w = im_weights(&b.values, e, eta);
        w[..k].iter_mut().for_each(|x| *x = 0.0);
        b.gram_range(k, n, &w, 1.0, &mut out);
        out
    };
    let base_bulk: Vec<DMatrix<f64>> = nodes.iter().map(|&e| bulk_at(base, k_base, e)).collect();
    let mut results = Vec::with_capacity(others.len());
    for other in others {
        let k_other = edge_count(other);
        let bulk: Vec<DMatrix<f64>> = nodes
            .iter()
            .zip(&base_bulk)
            .map(|(&e, bb)| bb - bulk_at(other, k_other, e))
            .collect();
        let mut worst: f64 = 0.0;
        let mut diff = DMatrix::zeros(n, n);
        for &e in &window.energies {
            diff.fill(0.0);
            for (coef, b) in lagrange(e).iter().zip(&bulk) {
                diff += b * *coef;
            }
            base.gram_range(0, k_base, &im_weights(&base.values, e, eta), 1.0, &mut diff);
            other.gram_range(0, k_other, &im_weights(&other.values, e, eta), -1.0, &mut diff);
            worst = worst.max(max_abs(&diff));
        }
        results.push(n as f64 * eta * worst);
    }
    Ok(results)
}

/// `|lambda_1 - lambda_1'|` and its value scaled by `N^{2/3+delta}`.
pub fn lambda1_drift(lambda1: f64, lambda1_k: f64, n: usize, delta: f64) -> (f64, f64) {
    let d = (lambda1 - lambda1_k).abs();
    (d, d * (n as f64).powf(2.0 / 3.0 + delta))
}
