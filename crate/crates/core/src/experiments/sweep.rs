//! Sensitivity sweeps: overlap of the tracked eigenvector of `H` with that of
//! `H^[k]` across a grid of `k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{Flags, TrialRecord};
use super::{scope, Curve};
use crate::error::{Error, Result};
use crate::resample::{make_pair_order_prefix, ResamplePair};
use crate::rng::{Role, Streams};
use crate::spectral::{aligned_inf_dist, eigen_window, overlap, EigenPairs, DEGENERATE_GAP};
use crate::stats::{mean_se, spearman};

/// Distance from eigenvalue `index` to its nearest held neighbor.
fn neighbor_gap(eigs: &EigenPairs, index: usize) -> Option<f64> {
    let v = eigs.value(index)?;
    let above = index.checked_sub(1).and_then(|i| eigs.value(i)).map(|u| u - v);
    let below = eigs.value(index + 1).map(|w| v - w);
    match (above, below) {
        (Some(a), Some(b)) => Some(a.min(b).max(0.0)),
        (Some(g), None) | (None, Some(g)) => Some(g.max(0.0)),
        (None, None) => None,
    }
}

fn warm_vectors(eigs: &EigenPairs) -> Vec<Vec<f64>> {
    eigs.vectors.iter().map(|(_, v)| v.clone()).collect()
}

/// All `k` columns of one trial. Columns share `(H, H', order)`; each `H^[k]`
/// is solved afresh, warm-started from the previous column.
pub fn sweep_trial(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, trial: u64) -> Vec<TrialRecord> {
    let q = cfg.q(n);
    let index = cfg.eigen_index.resolve(n).unwrap_or(1);
    let ks = cfg.k_rule.ks(n);
    let blank = |k: u64, alpha: Option<f64>| TrialRecord {
        experiment: kind.as_str().to_string(),
        master_seed: cfg.seed(),
        n,
        trial,
        q,
        k,
        alpha,
        eigen_index: index,
        overlap: None,
        aligned_inf_dist: None,
        lambda1: None,
        lambda1_k: None,
        chi: f64::NAN,
        chi_k: f64::NAN,
        gap12: None,
        gap12_k: None,
        matvecs: 0,
        flags: Flags::default(),
    };
    let fail_all = |err: Error, chi: f64| -> Vec<TrialRecord> {
        ks.iter()
            .map(|&(k, a)| {
                let mut r = blank(k, a);
                r.chi = chi;
                r.chi_k = chi;
                r.flags.fail(&err);
                r
            })
            .collect()
    };

    let streams = Streams::new(cfg.seed());
    let sc = scope(kind, n);
    let setup = || -> Result<_> {
        let spec = cfg.spec(n)?;
        let h = spec.sample(&mut streams.trial(&sc, trial, Role::Base))?;
        let hp = spec.sample(&mut streams.trial(&sc, trial, Role::Fresh))?;
        let kmax = ks.last().map_or(0, |p| p.0);
        let order = make_pair_order_prefix(n, kmax, &mut streams.trial(&sc, trial, Role::Order))?;
        Ok((spec, ResamplePair::new(h, hp, order)?))
    };
    let (spec, pair) = match setup() {
        Ok(v) => v,
        Err(e) => return fail_all(e, f64::NAN),
    };
    let base = spec.analysis(pair.base().clone());
    let chi = base.correction_term().value;
    let base_eigs = match eigen_window(&base, index, cfg.dense_cap(), None) {
        Ok(e) => e,
        Err(e) => return fail_all(e, chi),
    };
    let v = base_eigs.vector(index).expect("window holds the index").to_vec();
    let lambda = base_eigs.value(index);
    let gap = neighbor_gap(&base_eigs, index);
    let base_degenerate = gap.is_some_and(|g| g < DEGENERATE_GAP);

    let mut warm = warm_vectors(&base_eigs);
    let mut out = Vec::with_capacity(ks.len());
    for &(k, alpha) in &ks {
        let mut r = blank(k, alpha);
        r.lambda1 = lambda;
        r.chi = chi;
        r.gap12 = gap;
        r.flags.degenerate_gap = base_degenerate;
        if k == 0 {
            r.overlap = Some(1.0);
            r.aligned_inf_dist = Some(0.0);
            r.lambda1_k = lambda;
            r.chi_k = chi;
            r.gap12_k = gap;
            r.matvecs = base_eigs.matvecs;
            out.push(r);
            continue;
        }
        let step = || -> Result<(f64, EigenPairs)> {
            let hk = spec.analysis(pair.resample_to(k)?);
            let chi_k = hk.correction_term().value;
            let eigs = eigen_window(&hk, index, cfg.dense_cap(), Some(&warm))?;
            Ok((chi_k, eigs))
        };
        match step() {
            Ok((chi_k, eigs)) => {
                let vk = eigs.vector(index).expect("window holds the index");
                r.chi_k = chi_k;
                r.lambda1_k = eigs.value(index);
                r.gap12_k = neighbor_gap(&eigs, index);
                r.matvecs = eigs.matvecs;
                if r.gap12_k.is_some_and(|g| g < DEGENERATE_GAP) {
                    r.flags.degenerate_gap = true;
                }
                match (overlap(&v, vk), aligned_inf_dist(&v, vk)) {
                    (Ok(o), Ok(d)) => {
                        r.overlap = Some(o);
                        r.aligned_inf_dist = Some(d);
                    }
                    (Err(e), _) | (_, Err(e)) => r.flags.fail(&e),
                }
                warm = warm_vectors(&eigs);
            }
            Err(e) => {
                r.chi_k = f64::NAN;
                r.flags.fail(&e);
            }
        }
        out.push(r);
    }
    out
}

/// Mean overlap and aligned distance of one `(N, k)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub q: f64,
    pub k: u64,
    pub alpha: Option<f64>,
    pub trials: usize,
    pub used: usize,
    pub flagged: usize,
    pub mean_overlap: f64,
    pub se_overlap: f64,
    pub mean_overlap_sq: f64,
    pub se_overlap_sq: f64,
    pub mean_dist: f64,
    pub se_dist: f64,
}

/// Groups records by `(N, k)`; flagged records are counted, not averaged.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(usize, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.n, r.k)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((n, k), rs)| {
            let clean: Vec<&TrialRecord> =
                rs.iter().copied().filter(|r| r.flags.is_clean() && r.overlap.is_some()).collect();
            let ov: Vec<f64> = clean.iter().filter_map(|r| r.overlap).collect();
            let ov2: Vec<f64> = ov.iter().map(|o| o * o).collect();
            let dist: Vec<f64> = clean.iter().filter_map(|r| r.aligned_inf_dist).collect();
            let (mean_overlap, se_overlap) = mean_se(&ov);
            let (mean_overlap_sq, se_overlap_sq) = mean_se(&ov2);
            let (mean_dist, se_dist) = mean_se(&dist);
            SummaryRow {
                n,
                q: rs[0].q,
                k,
                alpha: rs[0].alpha,
                trials: rs.len(),
                used: clean.len(),
                flagged: rs.len() - clean.len(),
                mean_overlap,
                se_overlap,
                mean_overlap_sq,
                se_overlap_sq,
                mean_dist,
                se_dist,
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(
        "n,q,k,alpha,trials,used,flagged,mean_overlap,se_overlap,mean_overlap_sq,se_overlap_sq,mean_dist,se_dist\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.q,
            r.k,
            opt(r.alpha),
            r.trials,
            r.used,
            r.flagged,
            r.mean_overlap,
            r.se_overlap,
            r.mean_overlap_sq,
            r.se_overlap_sq,
            r.mean_dist,
            r.se_dist
        );
    }
    s
}

/// Mean-overlap curves per `N` over `k > 0`.
pub fn overlap_curves(rows: &[SummaryRow]) -> Vec<Curve> {
    let mut by_n: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.k > 0 && r.mean_overlap.is_finite()) {
        by_n.entry(r.n).or_default().push((r.k as f64, r.mean_overlap));
    }
    by_n.into_iter().map(|(n, points)| Curve { n, points }).collect()
}

/// Spearman correlation between `k` and mean overlap, `k = 0` included.
pub fn monotonicity(rows: &[SummaryRow], n: usize) -> f64 {
    let (ks, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.n == n && r.mean_overlap.is_finite()).map(|r| (r.k as f64, r.mean_overlap)).unzip();
    spearman(&ks, &ys)
}

/// First `k` at which the curve falls to `level`, interpolated in `ln k`.
pub fn threshold_k(curve: &Curve, level: f64) -> Option<f64> {
    let pts = &curve.points;
    for w in pts.windows(2) {
        let ((k0, y0), (k1, y1)) = (w[0], w[1]);
        if y0 >= level && y1 < level {
            let t = (y0 - level) / (y0 - y1);
            return Some((k0.ln() + t * (k1.ln() - k0.ln())).exp());
        }
    }
    None
}

/// Per-`k` margin of `E<v, v^[k]>^2 <= N^3 Var(lambda - X) / k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    pub n: usize,
    pub q: f64,
    pub k: u64,
    pub mean_overlap_sq: f64,
    pub se_overlap_sq: f64,
    pub variance: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Ratios of the squared-overlap mean to `N^3 Var / k`, with the variance of
/// `lambda - X` taken over the base draws of the same trials. `k = 0` is
/// outside the statement and skipped.
pub fn hmain1_check(records: &[TrialRecord]) -> Result<Vec<MarginRow>> {
    let mut base: BTreeMap<(usize, u64), f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.flags.is_clean()) {
        if let Some(l) = r.lambda1 {
            base.entry((r.n, r.trial)).or_insert(l - r.chi);
        }
    }
    let rows = summarize(records);
    let mut out = Vec::new();
    for row in rows.iter().filter(|r| r.k > 0) {
        let xs: Vec<f64> = base.range((row.n, 0)..=(row.n, u64::MAX)).map(|(_, v)| *v).collect();
        if xs.len() < 2 {
            return Err(Error::InsufficientData(format!("fewer than two base draws at n = {}", row.n)));
        }
        let variance = crate::stats::variance(&xs);
        let rhs = (row.n as f64).powi(3) * variance / row.k as f64;
        out.push(MarginRow {
            n: row.n,
            q: row.q,
            k: row.k,
            mean_overlap_sq: row.mean_overlap_sq,
            se_overlap_sq: row.se_overlap_sq,
            variance,
            rhs,
            ratio: row.mean_overlap_sq / rhs,
        });
    }
    Ok(out)
}

pub fn margin_csv(rows: &[MarginRow]) -> String {
    let mut s = String::from("n,q,k,mean_overlap_sq,se_overlap_sq,variance,rhs,ratio\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n, r.q, r.k, r.mean_overlap_sq, r.se_overlap_sq, r.variance, r.rhs, r.ratio
        );
    }
    s
}
