//! The `rmt-noise` binary: flags, config handling, outputs and reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rmt_noise_core::ensemble::Model;
use rmt_noise_core::io::read_matrix;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rmt-noise"));
    c.env_remove("RMT_NOISE_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SWEEP: &str = r#"
master_seed = 17
ns = [40, 60]
trials = 3
batch_size = 2
[q_rule]
exponent = 0.3333333333333333
[k_rule]
alphas = [1.2, 1.6]
include_full = true
"#;

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generate_round_trips_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.txt");
    let b = tmp.path().join("b.txt");
    for p in [&a, &b] {
        let o = run(&["generate", "--n", "80", "--q", "3", "--seed", "12", "--output", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, h) = read_matrix(&a).unwrap();
    assert_eq!((header.n, header.q, header.model, header.seed), (80, 3.0, Model::CenteredSparse, 12));
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), h.nnz_upper() + 1);
}

#[test]
fn generate_rejects_bad_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m.txt");
    let o = run(&["generate", "--n", "10", "--q", "5", "--seed", "1", "--output", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let o = run(&["generate", "--n", "10", "--q", "2", "--output", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--seed"));
    let o = run(&["generate", "--n", "10", "--q", "2", "--model", "bogus", "--seed", "1", "--output", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_trial_count_is_rejected_with_every_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "trials = 0\nns = []\n");
    let out = tmp.path().join("out");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for key in ["trials", "ns", "master_seed", "q_rule"] {
        assert!(err.contains(key), "{key} missing in {err}");
    }
}

#[test]
fn rerun_appends_nothing_and_summary_has_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), SWEEP);
    let out = tmp.path().join("out");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = dir_bytes(&out);
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--resume"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 batches computed, 4 already complete"));
    assert_eq!(first, dir_bytes(&out));

    let summary = fs::read_to_string(out.join("sweep/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert!(lines.next().unwrap().starts_with("n,q,k,"));
    // 2 sizes x {0, N^1.2, N^1.6, M}
    assert_eq!(lines.count(), 2 * 4);
    let rec = fs::read_to_string(out.join("sweep/records/sweep_n40_b0000.jsonl")).unwrap();
    assert!(rec.lines().next().unwrap().contains("\"config_hash\""));
}

#[test]
fn seed_flag_fills_config_and_env_sets_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &SWEEP.replace("master_seed = 17\n", ""));
    let o = run(&["gaps", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("master_seed"));
    let out = tmp.path().join("env_out");
    let o = bin().args(["gaps", "--config", &cfg, "--seed", "3"]).env("RMT_NOISE_OUT", &out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("gaps/gaps.csv").exists());
}

#[test]
fn changed_config_in_same_directory_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(tmp.path(), SWEEP);
    assert!(run(&["gaps", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let cfg = write_cfg(tmp.path(), &SWEEP.replace("trials = 3", "trials = 4"));
    let o = run(&["gaps", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("different configuration"));
}

#[test]
fn every_subcommand_writes_its_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let base = r#"
master_seed = 2
ns = [40, 50, 64, 80]
trials = 4
batch_size = 4
chatterjee_ks = [1, 20]
drift_alpha = 1.0
[q_rule]
constant = 3.0
[k_rule]
alphas = [1.2, 1.6]
"#;
    let er = base.replacen("master_seed = 2\n", "master_seed = 2\nmodel = \"er-adjacency\"\neigen_index = 2\n", 1);
    let cases: [(&str, String, &str); 7] = [
        ("sweep", base.to_string(), "summary.csv"),
        ("variance", base.to_string(), "variance.csv"),
        ("gaps", base.to_string(), "gaps.csv"),
        ("resolvent", base.to_string(), "drift.csv"),
        ("collapse", base.to_string(), "collapse.csv"),
        ("chatterjee", base.to_string(), "chatterjee.csv"),
        ("er", er, "sticking.csv"),
    ];
    for (cmd, text, file) in cases {
        let p = tmp.path().join(format!("{cmd}.toml"));
        fs::write(&p, text).unwrap();
        let o = run(&[cmd, "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).is_empty(), "{cmd}: {}", stderr(&o));
        assert!(out.join(cmd).join(file).exists(), "{cmd} missing {file}");
    }
}
