//! Eigenpairs and the edge statistics built from them.

mod lanczos;

pub use lanczos::{lanczos_top, LanczosOptions, LanczosOutput};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Negated, SymOperator};

/// Largest size handled by the dense solver unless configured otherwise.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Gap below which a pair of eigenvalues counts as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    DenseFull,
    IterativeTopm,
}

/// A run of consecutive eigenvalues `lambda_first >= lambda_{first+1} >= ...`
/// together with some unit eigenvectors.
///
/// Indices are 1-based in descending order, so index 1 is the top of the
/// spectrum and index `n` the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub n: usize,
    /// Index of `values[0]`.
    pub first_index: usize,
    /// Descending eigenvalues.
    pub values: Vec<f64>,
    /// `(index, vector)` with canonical sign.
    pub vectors: Vec<(usize, Vec<f64>)>,
    pub method: EigenMethod,
    /// Operator applications spent (0 on the dense path).
    pub matvecs: usize,
}

impl EigenPairs {
    /// Eigenvalue with 1-based index `i`, if held.
    pub fn value(&self, i: usize) -> Option<f64> {
        i.checked_sub(self.first_index).and_then(|p| self.values.get(p).copied())
    }

    /// Eigenvector with 1-based index `i`, if held.
    pub fn vector(&self, i: usize) -> Option<&[f64]> {
        self.vectors.iter().find(|(j, _)| *j == i).map(|(_, v)| v.as_slice())
    }

    /// Index one past the last value held.
    pub fn end_index(&self) -> usize {
        self.first_index + self.values.len()
    }
}

/// Flips `v` so that its largest-magnitude coordinate (lowest index on ties)
/// is positive.
pub fn canonicalize(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full dense eigen-decomposition with descending eigenvalues.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    /// Column `p` is the canonical-sign eigenvector of `values[p]`.
    pub vectors: DMatrix<f64>,
}

impl DenseSpectrum {
    pub fn vector(&self, p: usize) -> Vec<f64> {
        self.vectors.column(p).iter().copied().collect()
    }
}

/// Dense eigen-decomposition of `op`, refusing sizes above `cap`.
pub fn dense_decomposition<A: SymOperator + ?Sized>(op: &A, cap: usize) -> Result<DenseSpectrum> {
    let n = op.dim();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let mut d = op.to_dense();
    // exact symmetrization guards against rounding in implicit operators
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (d[(i, j)] + d[(j, i)]);
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(d);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        canonicalize(&mut v);
        vectors.column_mut(c).copy_from_slice(&v);
    }
    Ok(DenseSpectrum { values, vectors })
}

/// All eigenvalues plus the eigenvectors with the requested 1-based indices.
pub fn full_spectrum<A: SymOperator + ?Sized>(op: &A, cap: usize, want: &[usize]) -> Result<EigenPairs> {
    let n = op.dim();
    for &i in want {
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
    }
    let d = dense_decomposition(op, cap)?;
    let vectors = want.iter().map(|&i| (i, d.vector(i - 1))).collect();
    Ok(EigenPairs { n, first_index: 1, values: d.values, vectors, method: EigenMethod::DenseFull, matvecs: 0 })
}

/// Largest `m` eigenpairs by thick-restart Lanczos, optionally warm-started
/// from vectors of a nearby operator.
pub fn top_eigs<A: SymOperator + ?Sized>(op: &A, m: usize, warm: Option<&[Vec<f64>]>) -> Result<EigenPairs> {
    top_eigs_with(op, m, warm, &LanczosOptions::default())
}

pub fn top_eigs_with<A: SymOperator + ?Sized>(
    op: &A,
    m: usize,
    warm: Option<&[Vec<f64>]>,
    opts: &LanczosOptions,
) -> Result<EigenPairs> {
    let out = lanczos_top(op, m, warm, opts)?;
    let mut values = out.values;
    let mut vectors: Vec<(usize, Vec<f64>)> = out.vectors.into_iter().enumerate().map(|(c, v)| (c + 1, v)).collect();
    // Rayleigh quotients can swap order by rounding when values nearly coincide
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    values = order.iter().map(|&c| values[c]).collect();
    let mut sorted = Vec::with_capacity(vectors.len());
    for (slot, &c) in order.iter().enumerate() {
        let mut v = std::mem::take(&mut vectors[c].1);
        canonicalize(&mut v);
        sorted.push((slot + 1, v));
    }
    Ok(EigenPairs {
        n: op.dim(),
        first_index: 1,
        values,
        vectors: sorted,
        method: EigenMethod::IterativeTopm,
        matvecs: out.matvecs,
    })
}

/// Smallest `m` eigenpairs, reported with their global indices
/// `n - m + 1 ..= n` in descending order.
pub fn bottom_eigs<A: SymOperator + ?Sized>(op: &A, m: usize, warm: Option<&[Vec<f64>]>) -> Result<EigenPairs> {
    let n = op.dim();
    let neg = top_eigs(&Negated(op), m, warm)?;
    let values: Vec<f64> = neg.values.iter().rev().map(|v| -v).collect();
    let vectors = neg.vectors.into_iter().rev().map(|(c, v)| (n + 1 - c, v)).collect();
    Ok(EigenPairs { n, first_index: n + 1 - m, values, vectors, method: neg.method, matvecs: neg.matvecs })
}

/// Eigenpairs around 1-based index `index` with one neighbor on each side
/// where it exists, choosing the dense path when `n <= dense_cap` and the
/// iterative path otherwise (iterative supports only the two ends).
pub fn eigen_window<A: SymOperator + ?Sized>(
    op: &A,
    index: usize,
    dense_cap: usize,
    warm: Option<&[Vec<f64>]>,
) -> Result<EigenPairs> {
    let n = op.dim();
    if index == 0 || index > n {
        return Err(Error::IndexOutOfRange { index, n });
    }
    let near_top = index <= 8;
    let near_bottom = n - index < 8;
    if near_top && n > index + 1 {
        top_eigs(op, index + 1, warm)
    } else if near_bottom && index > 1 {
        bottom_eigs(op, n - index + 2, warm)
    } else if n <= dense_cap {
        full_spectrum(op, dense_cap, &[index])
    } else {
        Err(Error::DenseCapExceeded { n, cap: dense_cap })
    }
}

fn check_unit(v: &[f64]) -> Result<()> {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!("vector norm {nrm} is not 1")));
    }
    Ok(())
}

/// `|<v, w>|` for unit vectors.
pub fn overlap(v: &[f64], w: &[f64]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch(v.len(), w.len()));
    }
    check_unit(v)?;
    check_unit(w)?;
    let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok(d.abs().min(1.0))
}

/// `min_{s = +-1} sqrt(N) * max_i |v_i - s w_i|`.
pub fn aligned_inf_dist(v: &[f64], w: &[f64]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch(v.len(), w.len()));
    }
    let plus = v.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let minus = v.iter().zip(w).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    Ok((v.len() as f64).sqrt() * plus.min(minus))
}

/// `sqrt(N) * max_v ||v||_inf`.
pub fn delocalization_stat<V: AsRef<[f64]>>(vectors: &[V]) -> f64 {
    vectors
        .iter()
        .map(|v| {
            let v = v.as_ref();
            (v.len() as f64).sqrt() * v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub n: usize,
    /// `(i, lambda_i - lambda_{i+1})`.
    pub gaps: Vec<(usize, f64)>,
}

/// Consecutive gaps `lambda_i - lambda_{i+1}` for the given indices.
pub fn gap_stats(eigs: &EigenPairs, indices: &[usize]) -> Result<GapStats> {
    let mut gaps = Vec::with_capacity(indices.len());
    for &i in indices {
        let (Some(a), Some(b)) = (eigs.value(i), eigs.value(i + 1)) else {
            return Err(Error::IndexOutOfRange { index: i, n: eigs.n });
        };
        gaps.push((i, (a - b).max(0.0)));
    }
    Ok(GapStats { n: eigs.n, gaps })
}
