//! Sparse symmetric storage and the operator abstraction used by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of index pairs `(i, j)` with `i <= j` for an `n x n` matrix.
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * (n + 1) / 2
}

/// Row-major index of the upper-triangle pair `(i, j)`, `i <= j`.
pub fn pair_index(n: usize, i: usize, j: usize) -> u64 {
    debug_assert!(i <= j && j < n);
    let (n, i, j) = (n as u64, i as u64, j as u64);
    // rows 0..i hold i*n - i*(i-1)/2 pairs
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(n: usize, idx: u64) -> (usize, usize) {
    let nn = n as u64;
    // Row i starts at s(i) = i*n - i*(i-1)/2. Solve the quadratic, then fix up.
    let b = 2.0 * nn as f64 + 1.0;
    let disc = (b * b - 8.0 * idx as f64).max(0.0);
    let mut i = ((b - disc.sqrt()) / 2.0).floor().max(0.0) as u64;
    let start = |i: u64| i * nn - i * i.saturating_sub(1) / 2;
    while i > 0 && start(i) > idx {
        i -= 1;
    }
    while i + 1 < nn && start(i + 1) <= idx {
        i += 1;
    }
    let j = i + (idx - start(i));
    (i as usize, j as usize)
}

/// A symmetric linear operator.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Dense copy, for oracles and the dense eigensolver path.
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }
}

/// One stored upper-triangle entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: u32,
    pub j: u32,
    pub value: f64,
}

/// Symmetric matrix stored by its nonzero upper-triangle entries.
///
/// The entry list is sorted by `(i, j)` with `i <= j`, free of duplicates and
/// of explicit zeros. A CSR copy of the full symmetric pattern backs `apply`.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    entries: Vec<Entry>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl PartialEq for SparseSymMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.i == b.i && a.j == b.j && a.value.to_bits() == b.value.to_bits())
    }
}

impl SparseSymMatrix {
    /// Builds a matrix from upper-triangle entries given in any order.
    ///
    /// Zero values are dropped; duplicates and lower-triangle keys are errors.
    pub fn from_entries(n: usize, mut entries: Vec<Entry>) -> Result<Self> {
        entries.retain(|e| e.value != 0.0);
        for e in &entries {
            if e.i > e.j || e.j as usize >= n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({}, {}) is not an upper-triangle index for n = {n}",
                    e.i, e.j
                )));
            }
        }
        entries.sort_unstable_by_key(|e| (e.i, e.j));
        if entries.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidArgument("duplicate (i, j) entry".into()));
        }
        Ok(Self::from_sorted_unchecked(n, entries))
    }

    /// Builds from entries already sorted, unique, nonzero and upper-triangle.
    pub(crate) fn from_sorted_unchecked(n: usize, entries: Vec<Entry>) -> Self {
        debug_assert!(entries.windows(2).all(|w| (w[0].i, w[0].j) < (w[1].i, w[1].j)));
        let mut counts = vec![0usize; n + 1];
        for e in &entries {
            counts[e.i as usize + 1] += 1;
            if e.i != e.j {
                counts[e.j as usize + 1] += 1;
            }
        }
        for r in 0..n {
            counts[r + 1] += counts[r];
        }
        let row_ptr = counts.clone();
        let nnz = row_ptr[n];
        let mut cols = vec![0u32; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = counts;
        for e in &entries {
            let r = e.i as usize;
            cols[fill[r]] = e.j;
            vals[fill[r]] = e.value;
            fill[r] += 1;
            if e.i != e.j {
                let c = e.j as usize;
                cols[fill[c]] = e.i;
                vals[fill[c]] = e.value;
                fill[c] += 1;
            }
        }
        Self { n, entries, row_ptr, cols, vals }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_sorted_unchecked(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored upper-triangle entries, sorted by `(i, j)`.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz_upper(&self) -> usize {
        self.entries.len()
    }

    /// Value at `(i, j)` (either triangle).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i as u32, j as u32) } else { (j as u32, i as u32) };
        self.entries
            .binary_search_by_key(&(a, b), |e| (e.i, e.j))
            .map(|p| self.entries[p].value)
            .unwrap_or(0.0)
    }

    /// `sum_{i,j} h_ij^2` over the full symmetric matrix.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| if e.i == e.j { e.value * e.value } else { 2.0 * e.value * e.value })
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|e| e.i == e.j).map(|e| e.value).sum()
    }

    /// Returns a copy with the given upper-triangle values replaced.
    pub fn with_replaced(&self, changes: &[(usize, usize, f64)]) -> Self {
        let mut map: std::collections::BTreeMap<(u32, u32), f64> =
            self.entries.iter().map(|e| ((e.i, e.j), e.value)).collect();
        for &(i, j, v) in changes {
            let key = if i <= j { (i as u32, j as u32) } else { (j as u32, i as u32) };
            if v == 0.0 {
                map.remove(&key);
            } else {
                map.insert(key, v);
            }
        }
        let entries = map.into_iter().map(|((i, j), value)| Entry { i, j, value }).collect();
        Self::from_sorted_unchecked(self.n, entries)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }
}

impl SymOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut acc = 0.0;
            for p in lo..hi {
                acc += self.vals[p] * x[self.cols[p] as usize];
            }
            *out = acc;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for e in &self.entries {
            out[(e.i as usize, e.j as usize)] = e.value;
            out[(e.j as usize, e.i as usize)] = e.value;
        }
        out
    }
}

impl SymOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let yv = self * xv;
        y.copy_from_slice(yv.as_slice());
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// `-A`, used to reach the bottom of the spectrum with a top-end solver.
#[derive(Debug, Clone, Copy)]
pub struct Negated<'a, T: ?Sized>(pub &'a T);

impl<T: SymOperator + ?Sized> SymOperator for Negated<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        -self.0.to_dense()
    }
}
