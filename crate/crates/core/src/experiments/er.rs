//! Erdős–Rényi eigenvalue sticking: the second adjacency eigenvalue against
//! the top eigenvalue of the centered matrix, shifted by `a`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{Flags, StickingRecord};
use super::scope;
use crate::ensemble::{center_er, sample_er};
use crate::error::{Error, Result};
use crate::rng::{Role, Streams};
use crate::spectral::top_eigs;
use crate::stats::median;

pub fn sticking_trial(cfg: &ExperimentConfig, n: usize, trial: u64) -> StickingRecord {
    let kind = ExperimentKind::Sticking;
    let q = cfg.q(n);
    let mut rec = StickingRecord {
        experiment: kind.as_str().to_string(),
        master_seed: cfg.seed(),
        n,
        trial,
        q,
        nu2: None,
        nu_centered1: None,
        a: f64::NAN,
        residual: None,
        flags: Flags::default(),
    };
    let streams = Streams::new(cfg.seed());
    let run = |rec: &mut StickingRecord| -> Result<()> {
        let adj = sample_er(n, q, &mut streams.trial(&scope(kind, n), trial, Role::Base))?;
        let nu = top_eigs(&adj, 2, None)?;
        let centered = center_er(adj, q);
        rec.a = centered.a;
        let ring = top_eigs(&centered, 1, None)?;
        let (nu2, r1) = (nu.values[1], ring.values[0]);
        rec.nu2 = Some(nu2);
        rec.nu_centered1 = Some(r1);
        rec.residual = Some(n as f64 * (nu2 - (r1 - centered.a)).abs());
        Ok(())
    };
    if let Err(e) = run(&mut rec) {
        rec.flags.fail(&e);
    }
    rec
}

/// Largest allowed ratio between per-size medians.
pub const STICKING_STABILITY: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickingRow {
    pub n: usize,
    pub q: f64,
    pub used: usize,
    pub median_residual: f64,
    pub p90_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickingReport {
    pub rows: Vec<StickingRow>,
    /// Largest median over all sizes, the fitted constant.
    pub c_fit: f64,
    /// `max median / min median`.
    pub ratio: f64,
    pub stable: bool,
}

pub fn sticking_report(records: &[StickingRecord]) -> Result<StickingReport> {
    let mut by_n: BTreeMap<usize, Vec<&StickingRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.flags.is_clean()) {
        by_n.entry(r.n).or_default().push(r);
    }
    if by_n.is_empty() {
        return Err(Error::InsufficientData("no usable sticking trials".into()));
    }
    let rows: Vec<StickingRow> = by_n
        .into_iter()
        .map(|(n, rs)| {
            let res: Vec<f64> = rs.iter().filter_map(|r| r.residual).collect();
            StickingRow {
                n,
                q: rs[0].q,
                used: res.len(),
                median_residual: median(&res),
                p90_residual: crate::stats::quantile(&res, 0.9),
            }
        })
        .collect();
    let hi = rows.iter().map(|r| r.median_residual).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.median_residual).fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    Ok(StickingReport { rows, c_fit: hi, ratio, stable: ratio <= STICKING_STABILITY })
}

pub fn sticking_csv(report: &StickingReport) -> String {
    let mut s = String::from("n,q,used,median_residual,p90_residual\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.n, r.q, r.used, r.median_residual, r.p90_residual);
    }
    let _ = writeln!(s, "# c_fit={} ratio={} stable={}", report.c_fit, report.ratio, report.stable);
    s
}
