//! Experiment runner behind the `rmt-noise` binary: batching, persistence,
//! the run manifest and resumption.
//!
//! Each subcommand owns `OUT/<subcommand>/`, holding `manifest.json`, one
//! JSON-lines file per `(experiment, N, batch)` under `records/`, and CSV
//! summaries. Every file starts with a header carrying the config hash and
//! the artifact version. All writes go through a temporary file and a rename.

pub mod args;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rmt_noise_core::experiments::chatterjee::chatterjee_csv;
use rmt_noise_core::experiments::collapse::{collapse_csv, collapse_curves_csv, scaling_collapse};
use rmt_noise_core::experiments::drift::drift_csv;
use rmt_noise_core::experiments::edge::{gap_csv, variance_csv};
use rmt_noise_core::experiments::er::sticking_csv;
use rmt_noise_core::experiments::sweep::{margin_csv, overlap_curves, summary_csv};
use rmt_noise_core::experiments::{
    chatterjee_report, drift_report, gap_experiment, hmain1_check, run_batch, sticking_report, summarize,
    variance_scan, ChatterjeeRecord, DriftRecord, EdgeRecord, ExperimentConfig, ExperimentKind, StickingRecord,
    TrialRecord,
};
use rmt_noise_core::io::{atomic_write, config_hash, csv_header, jsonl_header, read_jsonl};
use rmt_noise_core::ARTIFACT_VERSION;

pub use args::{Cli, Command};

/// Experiment subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Sweep,
    Variance,
    Gaps,
    Resolvent,
    Er,
    Collapse,
    Chatterjee,
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::Sweep => "sweep",
            Study::Variance => "variance",
            Study::Gaps => "gaps",
            Study::Resolvent => "resolvent",
            Study::Er => "er",
            Study::Collapse => "collapse",
            Study::Chatterjee => "chatterjee",
        }
    }

    /// Experiments whose trials the subcommand runs.
    pub fn kinds(&self, cfg: &ExperimentConfig) -> Vec<ExperimentKind> {
        match self {
            Study::Sweep => vec![ExperimentKind::Sweep],
            Study::Variance => vec![ExperimentKind::Variance],
            Study::Gaps => vec![ExperimentKind::Gaps],
            Study::Resolvent => vec![ExperimentKind::Resolvent],
            Study::Er => vec![ExperimentKind::Er, ExperimentKind::Sticking],
            Study::Collapse if cfg.model.is_er() => vec![ExperimentKind::Er],
            Study::Collapse => vec![ExperimentKind::Sweep],
            Study::Chatterjee => vec![ExperimentKind::Chatterjee],
        }
    }
}

/// Where and how to run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Require an existing manifest with a matching config hash.
    pub resume: bool,
}

/// Persistent state of one subcommand's output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
    /// Summary files written, relative to the directory.
    pub outputs: BTreeMap<String, Vec<String>>,
    /// Completed `experiment/n/batch` keys.
    pub completed: BTreeSet<String>,
}

impl RunManifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let p = dir.join(Self::FILE);
        if !p.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        atomic_write(&dir.join(Self::FILE), text.as_bytes())?;
        Ok(())
    }
}

pub fn batch_key(kind: ExperimentKind, n: usize, batch: usize) -> String {
    format!("{kind}/{n}/{batch}")
}

pub fn record_path(dir: &Path, kind: ExperimentKind, n: usize, batch: usize) -> PathBuf {
    dir.join("records").join(format!("{kind}_n{n}_b{batch:04}.jsonl"))
}

/// Outcome of one subcommand run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub computed: usize,
    pub skipped: usize,
    /// Summary files written.
    pub outputs: Vec<PathBuf>,
    /// Problems computing summaries; batches are unaffected.
    pub warnings: Vec<String>,
}

/// Runs every pending batch of `study`, then rewrites its summaries.
pub fn run_study(study: Study, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let kinds = study.kinds(cfg);
    for &k in &kinds {
        cfg.validate(k)?;
    }
    let hash = config_hash(&(study.name(), cfg))?;
    let dir = opts.out.join(study.name());
    let mut manifest = match RunManifest::load(&dir)? {
        Some(m) if m.config_hash != hash => bail!(
            "{} holds results of a different configuration (hash {}, now {}); use another output directory",
            dir.display(),
            m.config_hash,
            hash
        ),
        Some(m) => m,
        None if opts.resume => bail!("nothing to resume: no manifest in {}", dir.display()),
        None => RunManifest {
            config_hash: hash.clone(),
            master_seed: cfg.seed(),
            version: ARTIFACT_VERSION.to_string(),
            outputs: BTreeMap::new(),
            completed: BTreeSet::new(),
        },
    };
    fs::create_dir_all(dir.join("records"))?;
    manifest.save(&dir)?;

    let pool = match opts.workers {
        Some(w) => Some(rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build()?),
        None => None,
    };
    let (mut computed, mut skipped) = (0, 0);
    for &kind in &kinds {
        for &n in &cfg.ns {
            for batch in 0..cfg.batches() {
                let key = batch_key(kind, n, batch);
                let path = record_path(&dir, kind, n, batch);
                if manifest.completed.contains(&key) && path.exists() {
                    skipped += 1;
                    continue;
                }
                let trials = cfg.batch_trials(batch);
                let lines = match &pool {
                    Some(p) => p.install(|| run_batch(cfg, kind, n, trials)),
                    None => run_batch(cfg, kind, n, trials),
                }?;
                let mut text = jsonl_header(kind.as_str(), &hash);
                text.push('\n');
                for l in lines {
                    text.push_str(&l);
                    text.push('\n');
                }
                atomic_write(&path, text.as_bytes())?;
                manifest.completed.insert(key);
                manifest.save(&dir)?;
                computed += 1;
            }
        }
    }

    let mut warnings = Vec::new();
    let files = summaries(study, cfg, &dir, &mut warnings)?;
    let mut outputs = Vec::new();
    let mut names = Vec::new();
    for (name, body) in files {
        let p = dir.join(&name);
        atomic_write(&p, format!("{}\n{}", csv_header(&hash), body).as_bytes())?;
        outputs.push(p);
        names.push(name);
    }
    manifest.outputs.insert(study.name().to_string(), names);
    manifest.save(&dir)?;
    Ok(RunReport { dir, computed, skipped, outputs, warnings })
}

/// Records of one experiment in `(N, batch)` order.
pub fn load_records<T: serde::de::DeserializeOwned>(
    dir: &Path,
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for batch in 0..cfg.batches() {
            let p = record_path(dir, kind, n, batch);
            let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            out.extend(read_jsonl::<T>(&text)?);
        }
    }
    Ok(out)
}

fn summaries(
    study: Study,
    cfg: &ExperimentConfig,
    dir: &Path,
    warnings: &mut Vec<String>,
) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    let mut note = |what: &str, e: rmt_noise_core::Error| warnings.push(format!("{what}: {e}"));
    match study {
        Study::Sweep | Study::Collapse | Study::Er => {
            let kind = study.kinds(cfg)[0];
            let recs: Vec<TrialRecord> = load_records(dir, cfg, kind)?;
            let rows = summarize(&recs);
            files.push(("summary.csv".to_string(), summary_csv(&rows)));
            if study == Study::Sweep {
                match hmain1_check(&recs) {
                    Ok(m) => files.push(("margin.csv".to_string(), margin_csv(&m))),
                    Err(e) => note("margin", e),
                }
            }
            if study == Study::Collapse {
                let index = cfg.eigen_index;
                let scale = move |n: usize| {
                    let j = index.resolve(n).unwrap_or(1);
                    (j.min(n - j).max(1) as f64).powf(2.0 / 3.0)
                };
                match scaling_collapse(&overlap_curves(&rows), &cfg.exponents, scale) {
                    Ok(r) => {
                        files.push(("collapse.csv".to_string(), collapse_csv(&r)));
                        files.push(("collapse_curves.csv".to_string(), collapse_curves_csv(&r)));
                    }
                    Err(e) => note("collapse", e),
                }
            }
            if study == Study::Er {
                let st: Vec<StickingRecord> = load_records(dir, cfg, ExperimentKind::Sticking)?;
                match sticking_report(&st) {
                    Ok(r) => files.push(("sticking.csv".to_string(), sticking_csv(&r))),
                    Err(e) => note("sticking", e),
                }
            }
        }
        Study::Variance => {
            let recs: Vec<EdgeRecord> = load_records(dir, cfg, ExperimentKind::Variance)?;
            match variance_scan(&recs, cfg.bootstrap, cfg.seed()) {
                Ok(r) => files.push(("variance.csv".to_string(), variance_csv(&r))),
                Err(e) => note("variance", e),
            }
        }
        Study::Gaps => {
            let recs: Vec<EdgeRecord> = load_records(dir, cfg, ExperimentKind::Gaps)?;
            match gap_experiment(&recs, &cfg.gap_deltas) {
                Ok(r) => files.push(("gaps.csv".to_string(), gap_csv(&r))),
                Err(e) => note("gaps", e),
            }
        }
        Study::Resolvent => {
            let recs: Vec<DriftRecord> = load_records(dir, cfg, ExperimentKind::Resolvent)?;
            match drift_report(&recs) {
                Ok(r) => files.push(("drift.csv".to_string(), drift_csv(&r))),
                Err(e) => note("drift", e),
            }
        }
        Study::Chatterjee => {
            let recs: Vec<ChatterjeeRecord> = load_records(dir, cfg, ExperimentKind::Chatterjee)?;
            match chatterjee_report(&recs) {
                Ok(r) => files.push(("chatterjee.csv".to_string(), chatterjee_csv(&r))),
                Err(e) => note("chatterjee", e),
            }
        }
    }
    Ok(files)
}

/// Reads a config file and applies flag values the file leaves unset.
pub fn load_config(path: &Path, seed: Option<u64>, dense_cap: Option<usize>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    cfg.master_seed = cfg.master_seed.or(seed);
    cfg.dense_cap = cfg.dense_cap.or(dense_cap);
    Ok(cfg)
}
