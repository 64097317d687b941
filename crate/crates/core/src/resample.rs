//! Entry resampling: a uniform ordering of the `M = N(N+1)/2` index pairs
//! realizes every resampled matrix `H^[k]` of one trial at once.

use std::collections::HashMap;

use rand::Rng;

use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::matrix::{pair_count, pair_from_index, pair_index, Entry, SparseSymMatrix};

#[derive(Debug, Clone)]
enum RankLookup {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

/// The first `len` elements of a uniform random permutation of the pairs
/// `{(i, j) : i <= j}`, encoded by [`pair_index`].
#[derive(Debug, Clone)]
pub struct PairOrder {
    n: usize,
    m: u64,
    prefix: Vec<u64>,
    ranks: RankLookup,
}

/// Draws a full uniform ordering of the pairs.
pub fn make_pair_order<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PairOrder> {
    make_pair_order_prefix(n, pair_count(n), rng)
}

/// Draws the first `len` positions of a uniform ordering.
///
/// Fisher–Yates is run lazily, so only `len` swaps are performed. The prefix
/// of a given stream does not depend on `len`.
pub fn make_pair_order_prefix<R: Rng + ?Sized>(n: usize, len: u64, rng: &mut R) -> Result<PairOrder> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("pair order needs n >= 2, got {n}")));
    }
    let m = pair_count(n);
    if len > m {
        return Err(Error::KOutOfRange { k: len, max: m });
    }
    if m > u32::MAX as u64 {
        return Err(Error::InvalidArgument(format!("n = {n} has too many pairs")));
    }
    let prefix: Vec<u64> = if len.saturating_mul(4) >= m {
        let mut perm: Vec<u64> = (0..m).collect();
        for i in 0..len {
            let j = rng.random_range(i..m);
            perm.swap(i as usize, j as usize);
        }
        perm.truncate(len as usize);
        perm
    } else {
        let mut swapped: HashMap<u64, u64> = HashMap::with_capacity(2 * len as usize);
        let mut out = Vec::with_capacity(len as usize);
        for i in 0..len {
            let j = rng.random_range(i..m);
            let vi = *swapped.get(&i).unwrap_or(&i);
            let vj = *swapped.get(&j).unwrap_or(&j);
            swapped.insert(j, vi);
            out.push(vj);
        }
        out
    };
    let ranks = if len.saturating_mul(4) >= m {
        let mut r = vec![u32::MAX; m as usize];
        for (pos, &p) in prefix.iter().enumerate() {
            r[p as usize] = pos as u32;
        }
        RankLookup::Dense(r)
    } else {
        RankLookup::Sparse(prefix.iter().enumerate().map(|(pos, &p)| (p, pos as u32)).collect())
    };
    Ok(PairOrder { n, m, prefix, ranks })
}

impl PairOrder {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of pairs `M`.
    pub fn pair_total(&self) -> u64 {
        self.m
    }

    /// Number of materialized positions.
    pub fn len(&self) -> u64 {
        self.prefix.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    /// The first `k` pairs, in order.
    pub fn prefix(&self, k: u64) -> Result<Vec<(usize, usize)>> {
        self.check_k(k)?;
        Ok(self.prefix[..k as usize].iter().map(|&p| pair_from_index(self.n, p)).collect())
    }

    /// Position of pair `(i, j)` in the ordering, if materialized.
    pub fn rank(&self, i: usize, j: usize) -> Option<u64> {
        let p = pair_index(self.n, i.min(j), i.max(j));
        let r = match &self.ranks {
            RankLookup::Dense(v) => v[p as usize],
            RankLookup::Sparse(h) => *h.get(&p).unwrap_or(&u32::MAX),
        };
        (r != u32::MAX).then_some(r as u64)
    }

    fn check_k(&self, k: u64) -> Result<()> {
        if k > self.m {
            return Err(Error::KOutOfRange { k, max: self.m });
        }
        if k > self.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} beyond the {} materialized positions",
                self.len()
            )));
        }
        Ok(())
    }
}

/// One changed entry between two resampled matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryDiff {
    pub i: usize,
    pub j: usize,
    pub old: f64,
    pub new: f64,
}

/// A base matrix, its independent copy, and the pair ordering coupling them.
#[derive(Debug, Clone)]
pub struct ResamplePair {
    base: SparseSymMatrix,
    fresh: SparseSymMatrix,
    order: PairOrder,
    base_rank: Vec<u64>,
    fresh_rank: Vec<u64>,
}

impl ResamplePair {
    pub fn new(base: SparseSymMatrix, fresh: SparseSymMatrix, order: PairOrder) -> Result<Self> {
        if base.n() != fresh.n() || base.n() != order.n() {
            return Err(Error::LengthMismatch(base.n(), fresh.n()));
        }
        let rank_of = |e: &Entry| order.rank(e.i as usize, e.j as usize).unwrap_or(u64::MAX);
        let base_rank = base.entries().iter().map(rank_of).collect();
        let fresh_rank = fresh.entries().iter().map(rank_of).collect();
        Ok(Self { base, fresh, order, base_rank, fresh_rank })
    }

    pub fn base(&self) -> &SparseSymMatrix {
        &self.base
    }

    pub fn fresh(&self) -> &SparseSymMatrix {
        &self.fresh
    }

    pub fn order(&self) -> &PairOrder {
        &self.order
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// `H^[k]`: fresh values on the first `k` pairs, base values elsewhere.
    pub fn resample_to(&self, k: u64) -> Result<SparseSymMatrix> {
        self.order.check_k(k)?;
        let b = self.base.entries();
        let f = self.fresh.entries();
        let mut out = Vec::with_capacity(b.len().max(f.len()));
        let (mut ib, mut jf) = (0, 0);
        loop {
            while ib < b.len() && self.base_rank[ib] < k {
                ib += 1;
            }
            while jf < f.len() && self.fresh_rank[jf] >= k {
                jf += 1;
            }
            match (b.get(ib), f.get(jf)) {
                (None, None) => break,
                (Some(&e), None) => {
                    out.push(e);
                    ib += 1;
                }
                (None, Some(&e)) => {
                    out.push(e);
                    jf += 1;
                }
                (Some(&eb), Some(&ef)) => {
                    // a pair is never kept from both sides
                    if (eb.i, eb.j) < (ef.i, ef.j) {
                        out.push(eb);
                        ib += 1;
                    } else {
                        out.push(ef);
                        jf += 1;
                    }
                }
            }
        }
        Ok(SparseSymMatrix::from_sorted_unchecked(self.n(), out))
    }

    /// Entries whose value differs between `H^[k_lo]` and `H^[k_hi]`, in
    /// resampling order.
    pub fn resample_diffs(&self, k_lo: u64, k_hi: u64) -> Result<Vec<EntryDiff>> {
        if k_lo > k_hi {
            return Err(Error::InvalidArgument(format!("k_lo = {k_lo} > k_hi = {k_hi}")));
        }
        self.order.check_k(k_hi)?;
        let mut touched: HashMap<(u32, u32), (u64, f64, f64)> = HashMap::new();
        for (e, &r) in self.base.entries().iter().zip(&self.base_rank) {
            if (k_lo..k_hi).contains(&r) {
                touched.entry((e.i, e.j)).or_insert((r, 0.0, 0.0)).1 = e.value;
            }
        }
        for (e, &r) in self.fresh.entries().iter().zip(&self.fresh_rank) {
            if (k_lo..k_hi).contains(&r) {
                touched.entry((e.i, e.j)).or_insert((r, 0.0, 0.0)).2 = e.value;
            }
        }
        let mut diffs: Vec<(u64, EntryDiff)> = touched
            .into_iter()
            .filter(|(_, (_, old, new))| old.to_bits() != new.to_bits())
            .map(|((i, j), (r, old, new))| (r, EntryDiff { i: i as usize, j: j as usize, old, new }))
            .collect();
        diffs.sort_unstable_by_key(|(r, _)| *r);
        Ok(diffs.into_iter().map(|(_, d)| d).collect())
    }
}

/// Applies a diff list to a matrix.
pub fn apply_diffs(h: &SparseSymMatrix, diffs: &[EntryDiff]) -> SparseSymMatrix {
    let changes: Vec<(usize, usize, f64)> = diffs.iter().map(|d| (d.i, d.j, d.new)).collect();
    h.with_replaced(&changes)
}

/// `H_(ij)`: `H` with the pair `(i, j)` redrawn from the ensemble law.
pub fn single_resample<R: Rng + ?Sized>(
    h: &SparseSymMatrix,
    spec: &EnsembleSpec,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<SparseSymMatrix> {
    single_resample_with(h, i, j, || spec.sample_entry(i, j, rng))
}

/// `H` with the pair `(i, j)` replaced by the value `draw` produces.
pub fn single_resample_with(
    h: &SparseSymMatrix,
    i: usize,
    j: usize,
    draw: impl FnOnce() -> f64,
) -> Result<SparseSymMatrix> {
    if i > j {
        return Err(Error::InvalidArgument(format!("single resample needs i <= j, got ({i}, {j})")));
    }
    if j >= h.n() {
        return Err(Error::IndexOutOfRange { index: j, n: h.n() });
    }
    Ok(h.with_replaced(&[(i, j, draw())]))
}

/// The scalars `Q_st` and `Z_st` of one single-entry resample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleResampleQuantities {
    /// `(h_st^2 - h''_st^2)(1 + 1[s != t]) / N`.
    pub q_st: f64,
    /// `(h_st - h''_st)(1 + 1[s != t])`.
    pub z_st: f64,
    pub pair: (usize, usize),
}

/// Reads `Q_st` and `Z_st` off a matrix and its single-entry resample.
pub fn single_resample_quantities(
    h: &SparseSymMatrix,
    h_st: &SparseSymMatrix,
    s: usize,
    t: usize,
) -> Result<SingleResampleQuantities> {
    let (s, t) = (s.min(t), s.max(t));
    if h.n() != h_st.n() {
        return Err(Error::LengthMismatch(h.n(), h_st.n()));
    }
    let others = |m: &SparseSymMatrix| -> Vec<Entry> {
        m.entries().iter().copied().filter(|e| (e.i as usize, e.j as usize) != (s, t)).collect()
    };
    let (a, b) = (others(h), others(h_st));
    let same = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| x.i == y.i && x.j == y.j && x.value.to_bits() == y.value.to_bits());
    if !same {
        return Err(Error::InvalidArgument(format!("matrices differ outside the pair ({s}, {t})")));
    }
    let old = h.get(s, t);
    let new = h_st.get(s, t);
    let factor = if s != t { 2.0 } else { 1.0 };
    let n = h.n() as f64;
    Ok(SingleResampleQuantities {
        q_st: (old * old - new * new) * factor / n,
        z_st: (old - new) * factor,
        pair: (s, t),
    })
}
