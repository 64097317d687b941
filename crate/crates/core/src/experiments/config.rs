//! Experiment configuration, read from TOML.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ensemble::{EntryLaw, EnsembleSpec, LawKind, Model};
use crate::error::{Error, Result};
use crate::matrix::pair_count;
use crate::spectral::DEFAULT_DENSE_CAP;

/// Which experiment a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sweep,
    Variance,
    Gaps,
    Resolvent,
    Er,
    Chatterjee,
    Sticking,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Gaps => "gaps",
            ExperimentKind::Resolvent => "resolvent",
            ExperimentKind::Er => "er",
            ExperimentKind::Chatterjee => "chatterjee",
            ExperimentKind::Sticking => "sticking",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `q = N^exponent` or a constant `q`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QRule {
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
}

impl QRule {
    pub fn power(exponent: f64) -> Self {
        Self { exponent: Some(exponent), constant: None }
    }

    pub fn constant(q: f64) -> Self {
        Self { exponent: None, constant: Some(q) }
    }

    pub fn q(&self, n: usize) -> f64 {
        match (self.exponent, self.constant) {
            (Some(e), _) => (n as f64).powf(e),
            (None, Some(c)) => c,
            (None, None) => f64::NAN,
        }
    }
}

/// Resample counts: `k = round(N^alpha)` capped at `M`, plus explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRule {
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub explicit: Vec<u64>,
    #[serde(default = "yes")]
    pub include_zero: bool,
    #[serde(default)]
    pub include_full: bool,
}

fn yes() -> bool {
    true
}

impl Default for KRule {
    fn default() -> Self {
        Self { alphas: DEFAULT_ALPHAS.to_vec(), explicit: Vec::new(), include_zero: true, include_full: false }
    }
}

/// Exponent grid bracketing the threshold.
pub const DEFAULT_ALPHAS: [f64; 8] = [1.2, 1.4, 1.5, 1.6, 1.667, 1.75, 1.85, 1.95];

impl KRule {
    /// Sorted distinct `(k, alpha)`; a `k` reached by several rules keeps the
    /// first alpha that produced it.
    pub fn ks(&self, n: usize) -> Vec<(u64, Option<f64>)> {
        let m = pair_count(n);
        let mut out: Vec<(u64, Option<f64>)> = Vec::new();
        if self.include_zero {
            out.push((0, None));
        }
        for &a in &self.alphas {
            out.push((((n as f64).powf(a).round() as u64).min(m), Some(a)));
        }
        for &k in &self.explicit {
            out.push((k, None));
        }
        if self.include_full {
            out.push((m, None));
        }
        let mut seen = std::collections::BTreeMap::new();
        for (k, a) in out {
            let slot = seen.entry(k).or_insert(a);
            if slot.is_none() {
                *slot = a;
            }
        }
        seen.into_iter().collect()
    }
}

/// Eigenvalue index: `Top(j)` is `lambda_j`, `Bottom(j)` is `lambda_{N-j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenIndex {
    Top(usize),
    Bottom(usize),
}

impl Default for EigenIndex {
    fn default() -> Self {
        EigenIndex::Top(1)
    }
}

impl EigenIndex {
    /// 1-based descending index for size `n`.
    pub fn resolve(&self, n: usize) -> Option<usize> {
        match *self {
            EigenIndex::Top(j) => (1..=n).contains(&j).then_some(j),
            EigenIndex::Bottom(j) => n.checked_sub(j).filter(|&i| i >= 1),
        }
    }
}

impl fmt::Display for EigenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenIndex::Top(j) => write!(f, "{j}"),
            EigenIndex::Bottom(0) => f.write_str("N"),
            EigenIndex::Bottom(j) => write!(f, "N-{j}"),
        }
    }
}

impl std::str::FromStr for EigenIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "N" {
            return Ok(EigenIndex::Bottom(0));
        }
        if let Some(rest) = t.strip_prefix("N-") {
            return rest
                .trim()
                .parse()
                .map(EigenIndex::Bottom)
                .map_err(|_| Error::InvalidArgument(format!("bad eigen index {s:?}")));
        }
        t.parse().map(EigenIndex::Top).map_err(|_| Error::InvalidArgument(format!("bad eigen index {s:?}")))
    }
}

impl Serialize for EigenIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EigenIndex::Top(j) => s.serialize_u64(*j as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for EigenIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(j) => Ok(EigenIndex::Top(j as usize)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One experiment's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub q_rule: QRule,
    #[serde(default)]
    pub k_rule: KRule,
    pub trials: Option<usize>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub law: LawKind,
    #[serde(default)]
    pub eigen_index: EigenIndex,
    pub dense_cap: Option<usize>,
    /// Edge-window exponent for resolvent statistics.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Resample count exponent of the resolvent drift experiment.
    #[serde(default = "default_drift_alpha")]
    pub drift_alpha: f64,
    /// Gap tail thresholds, in units of `1/N`.
    #[serde(default = "default_gap_deltas")]
    pub gap_deltas: Vec<f64>,
    /// Exponents tried by the scaling collapse.
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
    /// Values of `k` for the variance lemma check.
    #[serde(default = "default_chatterjee_ks")]
    pub chatterjee_ks: Vec<u64>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Optional `y^4` coefficient of the edge model.
    pub quartic: Option<f64>,
}

fn default_batch() -> usize {
    10
}

fn default_delta() -> f64 {
    crate::resolvent::DEFAULT_DELTA
}

fn default_drift_alpha() -> f64 {
    4.0 / 3.0
}

fn default_gap_deltas() -> Vec<f64> {
    vec![0.1, 0.3, 1.0]
}

fn default_exponents() -> Vec<f64> {
    vec![1.5, 5.0 / 3.0, 11.0 / 6.0]
}

fn default_chatterjee_ks() -> Vec<u64> {
    vec![10, 100, 1000]
}

fn default_bootstrap() -> usize {
    1000
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: None,
            ns: Vec::new(),
            q_rule: QRule::default(),
            k_rule: KRule::default(),
            trials: None,
            batch_size: default_batch(),
            model: Model::default(),
            law: LawKind::default(),
            eigen_index: EigenIndex::default(),
            dense_cap: None,
            delta: default_delta(),
            drift_alpha: default_drift_alpha(),
            gap_deltas: default_gap_deltas(),
            exponents: default_exponents(),
            chatterjee_ks: default_chatterjee_ks(),
            bootstrap: default_bootstrap(),
            quartic: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Master seed; only valid after [`validate`](Self::validate).
    pub fn seed(&self) -> u64 {
        self.master_seed.expect("validated config carries a seed")
    }

    pub fn trial_count(&self) -> usize {
        self.trials.unwrap_or(0)
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap.unwrap_or(DEFAULT_DENSE_CAP)
    }

    pub fn q(&self, n: usize) -> f64 {
        self.q_rule.q(n)
    }

    pub fn spec(&self, n: usize) -> Result<EnsembleSpec> {
        EnsembleSpec::new(n, self.q(n), EntryLaw::new(self.law), self.model)
    }

    /// Number of batches per size.
    pub fn batches(&self) -> usize {
        self.trial_count().div_ceil(self.batch_size.max(1))
    }

    /// Trial indices of one batch.
    pub fn batch_trials(&self, batch: usize) -> std::ops::Range<u64> {
        let lo = batch * self.batch_size;
        let hi = ((batch + 1) * self.batch_size).min(self.trial_count());
        lo as u64..hi as u64
    }

    /// Checks every key relevant to `kind`, reporting all problems at once.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let mut errs = Vec::new();
        if self.master_seed.is_none() {
            errs.push("master_seed: required (pass --seed or set it in the config)".to_string());
        }
        match self.trials {
            None => errs.push("trials: required".to_string()),
            Some(0) => errs.push("trials: must be at least 1".to_string()),
            _ => {}
        }
        if self.batch_size == 0 {
            errs.push("batch_size: must be at least 1".to_string());
        }
        if self.ns.is_empty() {
            errs.push("ns: at least one size required".to_string());
        }
        match (self.q_rule.exponent, self.q_rule.constant) {
            (Some(_), Some(_)) => errs.push("q_rule: set exactly one of exponent and constant".to_string()),
            (None, None) => errs.push("q_rule: set one of exponent and constant".to_string()),
            _ => {}
        }
        let model = match kind {
            ExperimentKind::Er | ExperimentKind::Sticking => {
                if !self.model.is_er() {
                    errs.push(format!("model: {kind} needs an er model, got {}", self.model));
                }
                self.model
            }
            _ => self.model,
        };
        for &n in &self.ns {
            let q = self.q(n);
            if n < 2 {
                errs.push(format!("ns: size {n} below 2"));
                continue;
            }
            if q.is_finite() {
                if let Err(e) = EnsembleSpec::new(n, q, EntryLaw::new(self.law), model) {
                    errs.push(format!("q_rule: {e} at n = {n}"));
                }
            }
            if self.eigen_index.resolve(n).is_none() {
                errs.push(format!("eigen_index: {} out of range for n = {n}", self.eigen_index));
            }
            let m = pair_count(n);
            if let Some(&k) = self.k_rule.explicit.iter().find(|&&k| k > m) {
                errs.push(format!("k_rule.explicit: k = {k} exceeds M = {m} at n = {n}"));
            }
            if kind == ExperimentKind::Chatterjee {
                if let Some(&k) = self.chatterjee_ks.iter().find(|&&k| k == 0 || k > m) {
                    errs.push(format!("chatterjee_ks: k = {k} outside 1..={m} at n = {n}"));
                }
            }
        }
        if self.k_rule.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            errs.push("k_rule.alphas: exponents must be finite and nonnegative".to_string());
        }
        if matches!(kind, ExperimentKind::Sweep | ExperimentKind::Er) && self.k_rule.ks(2).is_empty() {
            errs.push("k_rule: no resample counts".to_string());
        }
        if !(self.delta > 0.0 && self.delta < 2.0 / 3.0) {
            errs.push("delta: must lie in (0, 2/3)".to_string());
        }
        if self.gap_deltas.is_empty() || self.gap_deltas.iter().any(|d| !(*d > 0.0)) {
            errs.push("gap_deltas: need positive values".to_string());
        }
        if self.exponents.is_empty() {
            errs.push("exponents: need at least one".to_string());
        }
        if kind == ExperimentKind::Chatterjee && self.chatterjee_ks.is_empty() {
            errs.push("chatterjee_ks: need at least one k".to_string());
        }
        if let Some(cap) = self.dense_cap {
            if kind == ExperimentKind::Resolvent {
                if let Some(&n) = self.ns.iter().find(|&&n| n > cap) {
                    errs.push(format!("dense_cap: resolvent experiment needs n = {n} <= cap = {cap}"));
                }
            }
        }
        if let Some(c) = self.quartic {
            if !c.is_finite() || 1.0 + 12.0 * c <= 0.0 {
                errs.push(format!("quartic: coefficient {c} has no real edge"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = r#"
master_seed = 7
ns = [500, 1000]
trials = 20
batch_size = 5
model = "er-adjacency"
eigen_index = "N"
[q_rule]
exponent = 0.3333333333333333
[k_rule]
alphas = [1.5, 1.7]
explicit = [3]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed(), 7);
        assert_eq!(cfg.eigen_index, EigenIndex::Bottom(0));
        assert_eq!(cfg.eigen_index.resolve(500), Some(500));
        assert_eq!(cfg.batches(), 4);
        assert_eq!(cfg.batch_trials(3), 15..20);
        cfg.validate(ExperimentKind::Er).unwrap();
        let ks = cfg.k_rule.ks(500);
        assert_eq!(ks[0], (0, None));
        assert_eq!(ks[1], (3, None));
        assert_eq!(ks.len(), 4);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_lists_every_problem() {
        let cfg = ExperimentConfig { trials: Some(0), ..Default::default() };
        let Err(Error::Config(errs)) = cfg.validate(ExperimentKind::Sweep) else { panic!() };
        let joined = errs.join("\n");
        for key in ["master_seed", "trials", "ns", "q_rule"] {
            assert!(joined.contains(key), "{key} missing from {joined}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_q() {
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        let cfg = ExperimentConfig {
            master_seed: Some(1),
            ns: vec![16],
            trials: Some(1),
            q_rule: QRule::constant(5.0),
            ..Default::default()
        };
        assert!(cfg.validate(ExperimentKind::Sweep).is_err());
        let er = ExperimentConfig { q_rule: QRule::constant(4.0), model: Model::ErAdjacency, ..cfg.clone() };
        assert!(er.validate(ExperimentKind::Er).is_err());
    }

    #[test]
    fn k_grid_caps_and_dedupes() {
        let rule = KRule { alphas: vec![1.95, 2.5], explicit: vec![], include_zero: true, include_full: true };
        let ks = rule.ks(100);
        assert_eq!(ks, vec![(0, None), (pair_count(100), Some(1.95))]);
    }

    #[test]
    fn eigen_index_forms() {
        assert_eq!("2".parse::<EigenIndex>().unwrap(), EigenIndex::Top(2));
        assert_eq!("N-1".parse::<EigenIndex>().unwrap(), EigenIndex::Bottom(1));
        assert_eq!(EigenIndex::Bottom(1).resolve(10), Some(9));
        assert_eq!(EigenIndex::Top(11).resolve(10), None);
    }
}
