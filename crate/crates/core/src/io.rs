//! Matrix files, output headers and atomic writes.
//!
//! A matrix file starts with the line `N q model seed` followed by one
//! `i j value` line per stored upper-triangle entry (0-based indices). Values
//! are written in shortest round-trip form, so a read returns the same bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ensemble::Model;
use crate::error::{Error, Result};
use crate::matrix::{Entry, SparseSymMatrix};
use crate::ARTIFACT_VERSION;

/// First line of a matrix file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixHeader {
    pub n: usize,
    pub q: f64,
    pub model: Model,
    pub seed: u64,
}

pub fn format_matrix(header: &MatrixHeader, h: &SparseSymMatrix) -> String {
    let mut s = format!("{} {} {} {}\n", header.n, header.q, header.model, header.seed);
    for e in h.entries() {
        s.push_str(&format!("{} {} {}\n", e.i, e.j, e.value));
    }
    s
}

pub fn parse_matrix(text: &str) -> Result<(MatrixHeader, SparseSymMatrix)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let bad = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
    let f: Vec<&str> = first.split_whitespace().collect();
    if f.len() != 4 {
        return Err(bad(0, "header must be 'N q model seed'"));
    }
    let header = MatrixHeader {
        n: f[0].parse().map_err(|_| bad(0, "bad N"))?,
        q: f[1].parse().map_err(|_| bad(0, "bad q"))?,
        model: f[2].parse().map_err(|_| bad(0, "bad model"))?,
        seed: f[3].parse().map_err(|_| bad(0, "bad seed"))?,
    };
    let mut entries = Vec::new();
    for (ln, line) in lines {
        let p: Vec<&str> = line.split_whitespace().collect();
        if p.len() != 3 {
            return Err(bad(ln, "entry must be 'i j value'"));
        }
        let i: usize = p[0].parse().map_err(|_| bad(ln, "bad row index"))?;
        let j: usize = p[1].parse().map_err(|_| bad(ln, "bad column index"))?;
        let value: f64 = p[2].parse().map_err(|_| bad(ln, "bad value"))?;
        entries.push(Entry { i: i as u32, j: j as u32, value });
    }
    Ok((header, SparseSymMatrix::from_entries(header.n, entries)?))
}

pub fn write_matrix(path: &Path, header: &MatrixHeader, h: &SparseSymMatrix) -> Result<()> {
    atomic_write(path, format_matrix(header, h).as_bytes())
}

pub fn read_matrix(path: &Path) -> Result<(MatrixHeader, SparseSymMatrix)> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Lowercase hex SHA-256 of the JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect())
}

/// First line of a JSON-lines record file.
pub fn jsonl_header(kind: &str, hash: &str) -> String {
    #[derive(Serialize)]
    struct Header<'a> {
        header: bool,
        experiment: &'a str,
        config_hash: &'a str,
        version: &'a str,
    }
    serde_json::to_string(&Header { header: true, experiment: kind, config_hash: hash, version: ARTIFACT_VERSION })
        .expect("header serializes")
}

/// First line of a CSV output.
pub fn csv_header(hash: &str) -> String {
    format!("# config_hash={hash} version={ARTIFACT_VERSION}")
}

/// Record lines of a JSON-lines file, skipping the header.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("{\"header\""))
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
