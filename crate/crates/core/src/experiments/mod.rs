//! Monte Carlo studies: sensitivity sweeps and their scaling collapse,
//! eigenvalue and gap statistics, the variance-lemma estimator, resolvent
//! drift and the Erdős–Rényi program.
//!
//! Every study is a set of independent trials. A trial is a pure function of
//! `(config, N, trial index)`: its random inputs come from keyed substreams,
//! so trials can run in any order and on any worker.

pub mod chatterjee;
pub mod collapse;
pub mod config;
pub mod drift;
pub mod edge;
pub mod er;
pub mod records;
pub mod sweep;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chatterjee::{chatterjee_report, chatterjee_trial, ChatterjeeRow};
pub use collapse::{best_exponent, scaling_collapse, CollapseReport};
pub use config::{EigenIndex, ExperimentConfig, ExperimentKind, KRule, QRule};
pub use drift::{drift_report, drift_trial, DriftRow};
pub use edge::{edge_trial, gap_experiment, variance_scan, GapReport, VarianceReport};
pub use er::{sticking_report, sticking_trial, StickingReport};
pub use records::{ChatterjeeRecord, DriftRecord, EdgeRecord, Flags, Record, StickingRecord, TrialRecord};
pub use sweep::{hmain1_check, summarize, sweep_trial, threshold_k, SummaryRow};

use crate::error::Result;
use crate::rng::tag;

/// Stream scope separating experiments and sizes.
pub fn scope(kind: ExperimentKind, n: usize) -> [u64; 2] {
    [tag(kind.as_str()), n as u64]
}

/// Mean overlap against `k` for one size, `k` ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub n: usize,
    pub points: Vec<(f64, f64)>,
}

/// Runs `f` over the trial range on the current rayon pool, in trial order.
pub fn run_trials<T: Send>(trials: Range<u64>, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    trials.into_par_iter().map(f).collect()
}

/// Records of one `(N, trial range)` batch for the given experiment.
pub fn run_batch(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, trials: Range<u64>) -> Result<Vec<String>> {
    fn lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<String>> {
        items.into_iter().map(|r| Ok(serde_json::to_string(&r)?)).collect()
    }
    match kind {
        ExperimentKind::Sweep | ExperimentKind::Er => {
            lines(run_trials(trials, |t| sweep_trial(cfg, kind, n, t)).into_iter().flatten())
        }
        ExperimentKind::Variance | ExperimentKind::Gaps => lines(run_trials(trials, |t| edge_trial(cfg, kind, n, t))),
        ExperimentKind::Chatterjee => lines(run_trials(trials, |t| chatterjee_trial(cfg, n, t))),
        ExperimentKind::Resolvent => lines(run_trials(trials, |t| drift_trial(cfg, n, t))),
        ExperimentKind::Sticking => lines(run_trials(trials, |t| sticking_trial(cfg, n, t))),
    }
}

/// All trials of a sensitivity sweep plus the per-`(N, k)` summary.
pub fn sensitivity_sweep(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Vec<SummaryRow>)> {
    cfg.validate(ExperimentKind::Sweep)?;
    let trials = cfg.trial_count() as u64;
    let records: Vec<TrialRecord> = cfg
        .ns
        .iter()
        .flat_map(|&n| run_trials(0..trials, |t| sweep_trial(cfg, ExperimentKind::Sweep, n, t)).into_iter().flatten())
        .collect();
    let summary = summarize(&records);
    Ok((records, summary))
}

/// Overlap sweep of an Erdős–Rényi model at the configured index.
pub fn er_experiment(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Vec<SummaryRow>)> {
    cfg.validate(ExperimentKind::Er)?;
    let trials = cfg.trial_count() as u64;
    let records: Vec<TrialRecord> = cfg
        .ns
        .iter()
        .flat_map(|&n| run_trials(0..trials, |t| sweep_trial(cfg, ExperimentKind::Er, n, t)).into_iter().flatten())
        .collect();
    let summary = summarize(&records);
    Ok((records, summary))
}

/// Same as [`sensitivity_sweep`] for an eigenvector other than the top one;
/// exploratory.
pub fn other_index_sweep(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Vec<SummaryRow>)> {
    sensitivity_sweep(cfg)
}

/// Top-edge records over every size.
pub fn edge_records(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Vec<EdgeRecord>> {
    cfg.validate(kind)?;
    let trials = cfg.trial_count() as u64;
    Ok(cfg.ns.iter().flat_map(|&n| run_trials(0..trials, |t| edge_trial(cfg, kind, n, t))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn other_index_one_is_the_plain_sweep() {
        let cfg = ExperimentConfig {
            master_seed: Some(1),
            ns: vec![60],
            q_rule: QRule::power(1.0 / 3.0),
            k_rule: KRule { alphas: vec![1.3], explicit: vec![], include_zero: true, include_full: false },
            trials: Some(2),
            eigen_index: EigenIndex::Top(1),
            ..Default::default()
        };
        assert_eq!(sensitivity_sweep(&cfg).unwrap(), other_index_sweep(&cfg).unwrap());
    }

    #[test]
    fn batches_serialize_in_trial_order() {
        let cfg = ExperimentConfig {
            master_seed: Some(1),
            ns: vec![50],
            q_rule: QRule::power(1.0 / 3.0),
            trials: Some(4),
            ..Default::default()
        };
        let lines = run_batch(&cfg, ExperimentKind::Gaps, 50, 1..4).unwrap();
        assert_eq!(lines.len(), 3);
        for (t, l) in (1u64..).zip(&lines) {
            let r: EdgeRecord = serde_json::from_str(l).unwrap();
            assert_eq!(r.trial, t);
        }
    }
}
