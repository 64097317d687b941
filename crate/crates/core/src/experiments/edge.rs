//! Fluctuations of the top eigenvalue and of the top gap.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::records::{EdgeRecord, Flags};
use super::scope;
use crate::error::{Error, Result};
use crate::rng::{tag, Role, Streams};
use crate::spectral::{top_eigs, DEGENERATE_GAP};
use crate::stats::{bootstrap_variance_ci, linear_fit, mean, median, variance, LinearFit};

/// `lambda_1`, `lambda_2` and `X` of one draw.
pub fn edge_trial(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, trial: u64) -> EdgeRecord {
    let q = cfg.q(n);
    let mut rec = EdgeRecord {
        experiment: kind.as_str().to_string(),
        master_seed: cfg.seed(),
        n,
        trial,
        q,
        lambda1: None,
        lambda2: None,
        chi: f64::NAN,
        flags: Flags::default(),
    };
    let streams = Streams::new(cfg.seed());
    let run = || -> Result<_> {
        let spec = cfg.spec(n)?;
        let h = spec.analysis(spec.sample(&mut streams.trial(&scope(kind, n), trial, Role::Base))?);
        let chi = h.correction_term().value;
        Ok((chi, top_eigs(&h, 2, None)))
    };
    match run() {
        Ok((chi, eigs)) => {
            rec.chi = chi;
            match eigs {
                Ok(e) => {
                    rec.lambda1 = e.value(1);
                    rec.lambda2 = e.value(2);
                    rec.flags.degenerate_gap = rec.gap12().is_some_and(|g| g < DEGENERATE_GAP);
                }
                Err(e) => rec.flags.fail(&e),
            }
        }
        Err(e) => rec.flags.fail(&e),
    }
    rec
}

fn by_size(records: &[EdgeRecord]) -> BTreeMap<usize, Vec<&EdgeRecord>> {
    let mut m: BTreeMap<usize, Vec<&EdgeRecord>> = BTreeMap::new();
    for r in records {
        m.entry(r.n).or_default().push(r);
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub q: f64,
    pub used: usize,
    pub flagged: usize,
    /// Grand mean of `lambda_1 - X`, the estimate of `L`.
    pub l_hat: f64,
    /// Sample variance of `lambda_1 - L - X`.
    pub variance: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Sample variance of `lambda_1` alone.
    pub variance_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    /// Slope of `ln Var(lambda_1 - L - X)` against `ln N`.
    pub slope: f64,
    pub slope_se: f64,
    /// Same for `Var(lambda_1)`.
    pub slope_raw: f64,
    pub slope_raw_se: f64,
}

/// Per-size variance with a 95% bootstrap interval and the log-log slopes.
pub fn variance_scan(records: &[EdgeRecord], bootstrap: usize, master_seed: u64) -> Result<VarianceReport> {
    let groups = by_size(records);
    if groups.len() < 4 {
        return Err(Error::InsufficientData(format!("variance scan needs at least four sizes, got {}", groups.len())));
    }
    let streams = Streams::new(master_seed);
    let mut rows = Vec::new();
    for (n, rs) in groups {
        let clean: Vec<&EdgeRecord> = rs.iter().copied().filter(|r| r.flags.is_clean() && r.lambda1.is_some()).collect();
        if clean.len() < 2 {
            return Err(Error::InsufficientData(format!("fewer than two usable draws at n = {n}")));
        }
        let shifted: Vec<f64> = clean.iter().map(|r| r.lambda1.unwrap() - r.chi).collect();
        let raw: Vec<f64> = clean.iter().map(|r| r.lambda1.unwrap()).collect();
        let l_hat = mean(&shifted);
        let centered: Vec<f64> = shifted.iter().map(|x| x - l_hat).collect();
        let mut rng = streams.trial(&[tag("variance-bootstrap"), n as u64], 0, Role::Bootstrap);
        let (ci_lo, ci_hi) = bootstrap_variance_ci(&centered, bootstrap, 0.95, &mut rng);
        rows.push(VarianceRow {
            n,
            q: rs[0].q,
            used: clean.len(),
            flagged: rs.len() - clean.len(),
            l_hat,
            variance: variance(&centered),
            ci_lo,
            ci_hi,
            variance_raw: variance(&raw),
        });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let fit = linear_fit(&ln_n, &rows.iter().map(|r| r.variance.ln()).collect::<Vec<_>>());
    let raw = linear_fit(&ln_n, &rows.iter().map(|r| r.variance_raw.ln()).collect::<Vec<_>>());
    Ok(VarianceReport { rows, slope: fit.slope, slope_se: fit.slope_se, slope_raw: raw.slope, slope_raw_se: raw.slope_se })
}

pub fn variance_csv(report: &VarianceReport) -> String {
    let mut s = String::from("n,q,used,flagged,l_hat,variance,ci_lo,ci_hi,variance_raw\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n, r.q, r.used, r.flagged, r.l_hat, r.variance, r.ci_lo, r.ci_hi, r.variance_raw
        );
    }
    let _ = writeln!(s, "# slope={} slope_se={} slope_raw={} slope_raw_se={}", report.slope, report.slope_se, report.slope_raw, report.slope_raw_se);
    s
}

/// Empirical `P(lambda_1 - lambda_2 <= delta / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub delta: f64,
    pub p: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub q: f64,
    pub used: usize,
    pub median_gap: f64,
    pub tails: Vec<TailPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Slope of `ln median(gap)` against `ln N`.
    pub median_slope: f64,
    pub median_slope_se: f64,
    /// `max_N P(N, delta_max) / (delta_max ln N)`.
    pub c_fit: f64,
    /// Whether `P(N, delta) <= c_fit delta ln N + 3 SE` at every `(N, delta)`.
    pub tail_linear: bool,
}

/// Gap tails and the median-gap exponent. Degenerate gaps count toward the
/// tails since they are the event being measured.
pub fn gap_experiment(records: &[EdgeRecord], deltas: &[f64]) -> Result<GapReport> {
    let groups = by_size(records);
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!("gap experiment needs at least two sizes, got {}", groups.len())));
    }
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("no gap thresholds".into()));
    }
    let mut rows = Vec::new();
    for (n, rs) in groups {
        let gaps: Vec<f64> = rs.iter().filter(|r| !r.flags.solver_failure).filter_map(|r| r.gap12()).collect();
        if gaps.is_empty() {
            return Err(Error::InsufficientData(format!("no usable gaps at n = {n}")));
        }
        let m = gaps.len() as f64;
        let tails = deltas
            .iter()
            .map(|&d| {
                let p = gaps.iter().filter(|&&g| g <= d / n as f64).count() as f64 / m;
                TailPoint { delta: d, p, se: (p * (1.0 - p) / m).sqrt() }
            })
            .collect();
        rows.push(GapRow { n, q: rs[0].q, used: gaps.len(), median_gap: median(&gaps), tails });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let LinearFit { slope, slope_se, .. } =
        linear_fit(&ln_n, &rows.iter().map(|r| r.median_gap.ln()).collect::<Vec<_>>());
    let d_max = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_fit = rows
        .iter()
        .map(|r| {
            let t = r.tails.iter().find(|t| t.delta == d_max).expect("delta present");
            t.p / (d_max * (r.n as f64).ln())
        })
        .fold(0.0, f64::max);
    let tail_linear = rows
        .iter()
        .all(|r| r.tails.iter().all(|t| t.p <= c_fit * t.delta * (r.n as f64).ln() + 3.0 * t.se + 1e-12));
    Ok(GapReport { rows, median_slope: slope, median_slope_se: slope_se, c_fit, tail_linear })
}

pub fn gap_csv(report: &GapReport) -> String {
    let mut s = String::from("n,q,used,median_gap,delta,p,se\n");
    for r in &report.rows {
        for t in &r.tails {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.n, r.q, r.used, r.median_gap, t.delta, t.p, t.se);
        }
    }
    let _ = writeln!(
        s,
        "# median_slope={} median_slope_se={} c_fit={} tail_linear={}",
        report.median_slope, report.median_slope_se, report.c_fit, report.tail_linear
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, trial: u64, l1: f64, l2: f64, chi: f64) -> EdgeRecord {
        EdgeRecord {
            experiment: "variance".into(),
            master_seed: 0,
            n,
            trial,
            q: 2.0,
            lambda1: Some(l1),
            lambda2: Some(l2),
            chi,
            flags: Flags::default(),
        }
    }

    fn synthetic() -> Vec<EdgeRecord> {
        let mut out = Vec::new();
        for (g, &n) in [64usize, 128, 256, 512].iter().enumerate() {
            let s = (n as f64).powf(-2.0 / 3.0);
            for t in 0..50u64 {
                let z = ((t as f64 * 0.7 + g as f64).sin()) * s;
                out.push(rec(n, t, 2.0 + z + 0.01 * t as f64, 2.0 - s, 0.01 * t as f64));
            }
        }
        out
    }

    #[test]
    fn variance_is_shift_invariant() {
        let recs = synthetic();
        let a = variance_scan(&recs, 200, 5).unwrap();
        let shifted: Vec<EdgeRecord> = recs
            .iter()
            .cloned()
            .map(|mut r| {
                r.lambda1 = r.lambda1.map(|l| l + 7.25);
                r
            })
            .collect();
        let b = variance_scan(&shifted, 200, 5).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.variance - y.variance).abs() <= 1e-12 * x.variance.max(1e-300));
            assert!((x.l_hat + 7.25 - y.l_hat).abs() < 1e-12);
        }
        assert!((a.slope + 4.0 / 3.0).abs() < 0.1, "{}", a.slope);
        assert!(a.rows.iter().all(|r| r.ci_lo <= r.variance && r.variance <= r.ci_hi));
        assert!(variance_csv(&a).lines().count() == 6);
    }

    #[test]
    fn variance_needs_four_sizes() {
        let recs: Vec<EdgeRecord> = synthetic().into_iter().filter(|r| r.n != 64).collect();
        assert!(variance_scan(&recs, 10, 0).is_err());
    }

    #[test]
    fn gap_tails_saturate_and_fit_median() {
        let recs = synthetic();
        let r = gap_experiment(&recs, &[0.1, 1.0, 1e9]).unwrap();
        for row in &r.rows {
            assert_eq!(row.tails[2].p, 1.0);
        }
        assert!(r.median_slope < 0.0);
        assert!(r.c_fit > 0.0);
    }

    #[test]
    fn edge_trial_is_reproducible() {
        let cfg = ExperimentConfig {
            master_seed: Some(4),
            ns: vec![100],
            q_rule: super::super::config::QRule::power(1.0 / 3.0),
            trials: Some(1),
            ..Default::default()
        };
        let a = edge_trial(&cfg, ExperimentKind::Gaps, 100, 3);
        let b = edge_trial(&cfg, ExperimentKind::Gaps, 100, 3);
        assert_eq!(a, b);
        assert!(a.flags.is_clean());
        assert!(a.gap12().unwrap() > 0.0);
        assert!((a.lambda1.unwrap() - 2.0).abs() < 0.5);
    }
}
