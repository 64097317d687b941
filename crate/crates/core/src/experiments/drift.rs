//! Edge-window resolvent drift under partial and full resampling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{DriftRecord, Flags};
use super::scope;
use crate::edge_model::{edge_location, EdgeModel};
use crate::error::{Error, Result};
use crate::matrix::pair_count;
use crate::resample::{make_pair_order_prefix, ResamplePair};
use crate::resolvent::{lambda1_drift, resolvent_drifts, EdgeWindow, RowBasis};
use crate::rng::{Role, Streams};
use crate::spectral::dense_decomposition;
use crate::stats::median;

/// Resample count `round(N^alpha)` capped at `M`.
pub fn drift_k(n: usize, alpha: f64) -> u64 {
    ((n as f64).powf(alpha).round() as u64).min(pair_count(n))
}

/// Drift of `H^[k]` and of `H'` against `H` on the window around the model
/// edge of `H`.
pub fn drift_trial(cfg: &ExperimentConfig, n: usize, trial: u64) -> DriftRecord {
    let kind = ExperimentKind::Resolvent;
    let q = cfg.q(n);
    let k = drift_k(n, cfg.drift_alpha);
    let nf = n as f64;
    let mut rec = DriftRecord {
        experiment: kind.as_str().to_string(),
        master_seed: cfg.seed(),
        n,
        trial,
        q,
        k,
        delta: cfg.delta,
        edge: None,
        eta: nf.powf(-2.0 / 3.0 - cfg.delta),
        chi: f64::NAN,
        drift_k: None,
        drift_full: None,
        lambda1: None,
        lambda1_k: None,
        lambda1_full: None,
        lambda_drift_k: None,
        lambda_drift_full: None,
        flags: Flags::default(),
    };
    let streams = Streams::new(cfg.seed());
    let sc = scope(kind, n);
    let run = |rec: &mut DriftRecord| -> Result<()> {
        let spec = cfg.spec(n)?;
        let h = spec.sample(&mut streams.trial(&sc, trial, Role::Base))?;
        let hp = spec.sample(&mut streams.trial(&sc, trial, Role::Fresh))?;
        let order = make_pair_order_prefix(n, k, &mut streams.trial(&sc, trial, Role::Order))?;
        let pair = ResamplePair::new(h, hp, order)?;
        let base = spec.analysis(pair.base().clone());
        let chi = base.correction_term().value;
        rec.chi = chi;
        let model = EdgeModel::with_quartic(n, q, chi, cfg.quartic)?;
        let edge = edge_location(&model);
        rec.edge = Some(edge);
        let window = EdgeWindow::new(n, edge, cfg.delta);
        let cap = cfg.dense_cap();
        let sb = dense_decomposition(&base, cap)?;
        let sk = dense_decomposition(&spec.analysis(pair.resample_to(k)?), cap)?;
        let sf = dense_decomposition(&spec.analysis(pair.fresh().clone()), cap)?;
        let (l1, l1k, l1f) = (sb.values[0], sk.values[0], sf.values[0]);
        rec.lambda1 = Some(l1);
        rec.lambda1_k = Some(l1k);
        rec.lambda1_full = Some(l1f);
        rec.lambda_drift_k = Some(lambda1_drift(l1, l1k, n, cfg.delta).1);
        rec.lambda_drift_full = Some(lambda1_drift(l1, l1f, n, cfg.delta).1);
        let (rb, rk, rf) = (RowBasis::from(&sb), RowBasis::from(&sk), RowBasis::from(&sf));
        drop((sb, sk, sf));
        let d = resolvent_drifts(&rb, &[&rk, &rf], &window)?;
        rec.drift_k = Some(d[0]);
        rec.drift_full = Some(d[1]);
        Ok(())
    };
    if let Err(e) = run(&mut rec) {
        rec.flags.fail(&e);
    }
    rec
}

/// Threshold `N^{-0.02}` for the partial-resample drift.
pub fn small_drift_threshold(n: usize) -> f64 {
    (n as f64).powf(-0.02)
}

/// Level the full-resample drift is compared with.
pub const LARGE_DRIFT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub n: usize,
    pub q: f64,
    pub k: u64,
    pub used: usize,
    pub flagged: usize,
    pub threshold: f64,
    /// Fraction of trials with partial drift at most `threshold`.
    pub frac_small: f64,
    /// Fraction of trials with full drift above [`LARGE_DRIFT`].
    pub frac_full_large: f64,
    pub median_drift_k: f64,
    pub median_drift_full: f64,
    pub median_lambda_drift_k: f64,
    pub median_lambda_drift_full: f64,
}

pub fn drift_report(records: &[DriftRecord]) -> Result<Vec<DriftRow>> {
    let mut by_n: BTreeMap<usize, Vec<&DriftRecord>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut out = Vec::new();
    for (n, rs) in by_n {
        let clean: Vec<&DriftRecord> =
            rs.iter().copied().filter(|r| r.flags.is_clean() && r.drift_k.is_some()).collect();
        if clean.is_empty() {
            return Err(Error::InsufficientData(format!("no usable drift trials at n = {n}")));
        }
        let m = clean.len() as f64;
        let threshold = small_drift_threshold(n);
        let pick = |f: fn(&DriftRecord) -> Option<f64>| clean.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
        let dk = pick(|r| r.drift_k);
        let df = pick(|r| r.drift_full);
        out.push(DriftRow {
            n,
            q: rs[0].q,
            k: rs[0].k,
            used: clean.len(),
            flagged: rs.len() - clean.len(),
            threshold,
            frac_small: dk.iter().filter(|&&d| d <= threshold).count() as f64 / m,
            frac_full_large: df.iter().filter(|&&d| d > LARGE_DRIFT).count() as f64 / m,
            median_drift_k: median(&dk),
            median_drift_full: median(&df),
            median_lambda_drift_k: median(&pick(|r| r.lambda_drift_k)),
            median_lambda_drift_full: median(&pick(|r| r.lambda_drift_full)),
        });
    }
    Ok(out)
}

pub fn drift_csv(rows: &[DriftRow]) -> String {
    let mut s = String::from(
        "n,q,k,used,flagged,threshold,frac_small,frac_full_large,median_drift_k,median_drift_full,median_lambda_drift_k,median_lambda_drift_full\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.q,
            r.k,
            r.used,
            r.flagged,
            r.threshold,
            r.frac_small,
            r.frac_full_large,
            r.median_drift_k,
            r.median_drift_full,
            r.median_lambda_drift_k,
            r.median_lambda_drift_full
        );
    }
    s
}
