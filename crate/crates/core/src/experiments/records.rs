//! Per-trial records written as JSON lines.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Problems encountered in one trial. Flagged records are kept but excluded
/// from means.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub degenerate_gap: bool,
    pub solver_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Flags {
    pub fn is_clean(&self) -> bool {
        !self.degenerate_gap && !self.solver_failure
    }

    pub fn fail(&mut self, err: &Error) {
        self.solver_failure = true;
        if self.error.is_none() {
            self.error = Some(err.to_string());
        }
    }
}

/// One `(N, k, trial)` cell of a sensitivity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub master_seed: u64,
    pub n: usize,
    pub trial: u64,
    pub q: f64,
    pub k: u64,
    pub alpha: Option<f64>,
    /// 1-based index of the tracked eigenvector.
    pub eigen_index: usize,
    pub overlap: Option<f64>,
    pub aligned_inf_dist: Option<f64>,
    /// Tracked eigenvalue of `H` and of `H^[k]`.
    pub lambda1: Option<f64>,
    pub lambda1_k: Option<f64>,
    pub chi: f64,
    pub chi_k: f64,
    /// Distance from the tracked eigenvalue to its nearest neighbor, for `H`
    /// and for `H^[k]`.
    pub gap12: Option<f64>,
    pub gap12_k: Option<f64>,
    pub matvecs: usize,
    pub flags: Flags,
}

/// Top two eigenvalues and the correction term of one draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub experiment: String,
    pub master_seed: u64,
    pub n: usize,
    pub trial: u64,
    pub q: f64,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub chi: f64,
    pub flags: Flags,
}

impl EdgeRecord {
    pub fn gap12(&self) -> Option<f64> {
        Some((self.lambda1? - self.lambda2?).max(0.0))
    }
}

/// One `k` column of a variance-lemma trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatterjeeTerm {
    pub k: u64,
    /// Whether the probed coordinate lies in `sigma[k-1]`.
    pub in_sigma: bool,
    pub f_sigma: f64,
    pub f_j_sigma: f64,
    /// `(f(Y) - f(Y^(j))) (f(Y^sigma) - f(Y^(j)sigma))`.
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatterjeeRecord {
    pub experiment: String,
    pub master_seed: u64,
    pub n: usize,
    pub trial: u64,
    pub q: f64,
    /// Upper-triangle pair playing the role of coordinate `j`.
    pub pair: (usize, usize),
    pub f_y: Option<f64>,
    pub f_y_j: Option<f64>,
    pub terms: Vec<ChatterjeeTerm>,
    pub flags: Flags,
}

/// Resolvent and top-eigenvalue drift of one trial, against `H^[k]` and
/// against the independent copy `H'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub experiment: String,
    pub master_seed: u64,
    pub n: usize,
    pub trial: u64,
    pub q: f64,
    pub k: u64,
    pub delta: f64,
    pub edge: Option<f64>,
    pub eta: f64,
    pub chi: f64,
    pub drift_k: Option<f64>,
    pub drift_full: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda1_k: Option<f64>,
    pub lambda1_full: Option<f64>,
    /// `|lambda_1 - lambda_1^[k]| N^{2/3+delta}`.
    pub lambda_drift_k: Option<f64>,
    pub lambda_drift_full: Option<f64>,
    pub flags: Flags,
}

/// Second adjacency eigenvalue against the shifted top centered eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickingRecord {
    pub experiment: String,
    pub master_seed: u64,
    pub n: usize,
    pub trial: u64,
    pub q: f64,
    pub nu2: Option<f64>,
    pub nu_centered1: Option<f64>,
    pub a: f64,
    /// `N |nu_2 - (nu_centered_1 - a)|`.
    pub residual: Option<f64>,
    pub flags: Flags,
}

/// Records sharing the experiment bookkeeping fields.
pub trait Record: Serialize + serde::de::DeserializeOwned + Send {
    fn n(&self) -> usize;
    fn trial(&self) -> u64;
    fn flags(&self) -> &Flags;
}

macro_rules! impl_record {
    ($($t:ty),*) => {$(
        impl Record for $t {
            fn n(&self) -> usize {
                self.n
            }
            fn trial(&self) -> u64 {
                self.trial
            }
            fn flags(&self) -> &Flags {
                &self.flags
            }
        }
    )*};
}

impl_record!(TrialRecord, EdgeRecord, ChatterjeeRecord, DriftRecord, StickingRecord);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_values_round_trip_as_null() {
        let r = EdgeRecord {
            experiment: "gaps".into(),
            master_seed: 3,
            n: 10,
            trial: 0,
            q: 2.0,
            lambda1: Some(2.1),
            lambda2: None,
            chi: 0.01,
            flags: Flags { solver_failure: true, ..Default::default() },
        };
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.contains("\"lambda2\":null"));
        let back: EdgeRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.gap12(), None);
        assert!(!back.flags.is_clean());
    }
}
