//! Monte Carlo estimate of `I_k` in the variance lemma
//! `I_k <= ((n+1)/n) 2 Var f(Y) / k`.
//!
//! With independent copies `Y, Y', Y'', Y'''`, a uniform coordinate `j` and a
//! uniform ordering `sigma`:
//! - `Y^(j)` replaces coordinate `j` of `Y` by `Y'_j`;
//! - `Y^sigma[m]` replaces the first `m` coordinates of `sigma` by those of `Y'`;
//! - `Y^(j)sigma[m]` is `Y^sigma[m]` with coordinate `j` replaced by `Y''_j`
//!   when `j` lies in `sigma[m]`, else by `Y'''_j`;
//! - `I_k = E[(f(Y) - f(Y^(j))) (f(Y^sigma[k-1]) - f(Y^(j)sigma[k-1]))]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{ChatterjeeRecord, ChatterjeeTerm, Flags};
use super::scope;
use crate::ensemble::AnalysisMatrix;
use crate::error::{Error, Result};
use crate::matrix::{pair_count, pair_from_index, SparseSymMatrix};
use crate::resample::{make_pair_order_prefix, ResamplePair};
use crate::rng::{Role, Streams};
use crate::spectral::{full_spectrum, top_eigs};
use crate::stats::{mean_se, variance};

/// Sizes at or below this use the dense eigensolver for `f`.
const DENSE_F_MAX: usize = 256;

/// `Y^(j)`.
pub fn replace_one(y: &[f64], y1: &[f64], j: usize) -> Vec<f64> {
    let mut out = y.to_vec();
    out[j] = y1[j];
    out
}

/// `Y^sigma[m]`.
pub fn replace_prefix(y: &[f64], y1: &[f64], sigma: &[usize], m: usize) -> Vec<f64> {
    let mut out = y.to_vec();
    for &p in &sigma[..m] {
        out[p] = y1[p];
    }
    out
}

/// `Y^(j)sigma[m]`.
pub fn replace_prefix_then_one(
    y: &[f64],
    y1: &[f64],
    y2: &[f64],
    y3: &[f64],
    sigma: &[usize],
    m: usize,
    j: usize,
) -> Vec<f64> {
    let mut out = replace_prefix(y, y1, sigma, m);
    out[j] = if sigma[..m].contains(&j) { y2[j] } else { y3[j] };
    out
}

/// The product inside `I_k` for each `k`, on plain coordinate vectors.
#[allow(clippy::too_many_arguments)]
pub fn vector_products(
    f: impl Fn(&[f64]) -> f64,
    y: &[f64],
    y1: &[f64],
    y2: &[f64],
    y3: &[f64],
    sigma: &[usize],
    j: usize,
    ks: &[usize],
) -> Vec<f64> {
    let d = f(y) - f(&replace_one(y, y1, j));
    ks.iter()
        .map(|&k| {
            let m = k - 1;
            d * (f(&replace_prefix(y, y1, sigma, m)) - f(&replace_prefix_then_one(y, y1, y2, y3, sigma, m, j)))
        })
        .collect()
}

/// `I_k` for `f = sum of n i.i.d. coordinates of variance `var``.
pub fn linear_ik(n: usize, k: usize, var: f64) -> f64 {
    var * (1.0 - 2.0 * (k - 1) as f64 / n as f64)
}

/// `((n+1)/n) 2 Var f / k`.
pub fn lemma_bound(n_vars: u64, k: u64, var_f: f64) -> f64 {
    let n = n_vars as f64;
    (n + 1.0) / n * 2.0 * var_f / k as f64
}

/// `f = lambda_1 - X` of the analysed matrix. The constant `L` cancels in
/// `I_k` and in `Var f`.
pub fn top_minus_chi(h: &AnalysisMatrix, dense_cap: usize) -> Result<f64> {
    let n = crate::matrix::SymOperator::dim(h);
    let chi = h.correction_term().value;
    let l1 = if n <= DENSE_F_MAX.min(dense_cap) {
        full_spectrum(h, dense_cap, &[1])?.values[0]
    } else {
        top_eigs(h, 1, None)?.values[0]
    };
    Ok(l1 - chi)
}

/// One draw of `(j, sigma, Y, Y', Y'', Y''')` on the matrix entries, evaluated
/// at every configured `k`.
pub fn chatterjee_trial(cfg: &ExperimentConfig, n: usize, trial: u64) -> ChatterjeeRecord {
    let kind = ExperimentKind::Chatterjee;
    let mut rec = ChatterjeeRecord {
        experiment: kind.as_str().to_string(),
        master_seed: cfg.seed(),
        n,
        trial,
        q: cfg.q(n),
        pair: (0, 0),
        f_y: None,
        f_y_j: None,
        terms: Vec::new(),
        flags: Flags::default(),
    };
    let streams = Streams::new(cfg.seed());
    let sc = scope(kind, n);
    let mut ks = cfg.chatterjee_ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let run = |rec: &mut ChatterjeeRecord| -> Result<()> {
        let spec = cfg.spec(n)?;
        let m_pairs = pair_count(n);
        let h = spec.sample(&mut streams.trial(&sc, trial, Role::Base))?;
        let hp = spec.sample(&mut streams.trial(&sc, trial, Role::Fresh))?;
        let kmax = *ks.last().ok_or_else(|| Error::InvalidArgument("no k values".into()))?;
        let order = make_pair_order_prefix(n, kmax - 1, &mut streams.trial(&sc, trial, Role::Order))?;
        let (i, j) = pair_from_index(n, streams.trial(&sc, trial, Role::Aux).random_range(0..m_pairs));
        rec.pair = (i, j);
        let second = spec.sample_entry(i, j, &mut streams.trial(&sc, trial, Role::Second));
        let third = spec.sample_entry(i, j, &mut streams.trial(&sc, trial, Role::Third));
        let f = |m: SparseSymMatrix| top_minus_chi(&spec.analysis(m), cfg.dense_cap());
        let f_y = f(h.clone())?;
        let f_y_j = f(h.with_replaced(&[(i, j, hp.get(i, j))]))?;
        rec.f_y = Some(f_y);
        rec.f_y_j = Some(f_y_j);
        let pair = ResamplePair::new(h, hp, order)?;
        for &k in &ks {
            let m = k - 1;
            let in_sigma = pair.order().rank(i, j).is_some_and(|r| r < m);
            let y_sigma = pair.resample_to(m)?;
            let replaced = y_sigma.with_replaced(&[(i, j, if in_sigma { second } else { third })]);
            let f_sigma = f(y_sigma)?;
            let f_j_sigma = f(replaced)?;
            rec.terms.push(ChatterjeeTerm {
                k,
                in_sigma,
                f_sigma,
                f_j_sigma,
                product: (f_y - f_y_j) * (f_sigma - f_j_sigma),
            });
        }
        Ok(())
    };
    if let Err(e) = run(&mut rec) {
        rec.flags.fail(&e);
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatterjeeRow {
    pub n: usize,
    pub q: f64,
    pub k: u64,
    pub used: usize,
    pub estimate: f64,
    pub se: f64,
    pub var_f: f64,
    pub bound: f64,
    /// `estimate <= bound + 3 SE`.
    pub holds: bool,
}

/// Estimate of `I_k` with its bound, per `(N, k)`.
pub fn chatterjee_report(records: &[ChatterjeeRecord]) -> Result<Vec<ChatterjeeRow>> {
    let mut by_n: BTreeMap<usize, Vec<&ChatterjeeRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.flags.is_clean()) {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut out = Vec::new();
    for (n, rs) in by_n {
        let fs: Vec<f64> = rs.iter().filter_map(|r| r.f_y).collect();
        if fs.len() < 2 {
            return Err(Error::InsufficientData(format!("fewer than two trials at n = {n}")));
        }
        let var_f = variance(&fs);
        let mut per_k: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for r in &rs {
            for t in &r.terms {
                per_k.entry(t.k).or_default().push(t.product);
            }
        }
        for (k, prods) in per_k {
            let (estimate, se) = mean_se(&prods);
            let bound = lemma_bound(pair_count(n), k, var_f);
            out.push(ChatterjeeRow {
                n,
                q: rs[0].q,
                k,
                used: prods.len(),
                estimate,
                se,
                var_f,
                bound,
                holds: estimate <= bound + 3.0 * se,
            });
        }
    }
    Ok(out)
}

pub fn chatterjee_csv(rows: &[ChatterjeeRow]) -> String {
    let mut s = String::from("n,q,k,used,estimate,se,var_f,bound,holds\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n, r.q, r.k, r.used, r.estimate, r.se, r.var_f, r.bound, r.holds
        );
    }
    s
}
