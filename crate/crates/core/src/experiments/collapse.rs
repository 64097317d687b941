//! Finite-size scaling collapse of overlap curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Curve;
use crate::error::{Error, Result};
use crate::stats::interpolate;

/// Points on the common abscissa range.
pub const COLLAPSE_GRID: usize = 50;

/// Collapse quality of one trial exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub exponent: f64,
    /// Largest spread between curves over the common range; `None` when the
    /// rescaled ranges do not overlap.
    pub error: Option<f64>,
    /// Common range of `ln(k s(N) / N^exponent)`.
    pub lo: f64,
    pub hi: f64,
    pub grid: Vec<f64>,
    /// `(N, curve values on the grid)`.
    pub curves: Vec<(usize, Vec<f64>)>,
}

/// Rescales each curve to `x = ln(k * scale(N) / N^e)` and measures the
/// largest vertical spread on a grid over the common range, for each `e`.
pub fn scaling_collapse(
    curves: &[Curve],
    exponents: &[f64],
    scale: impl Fn(usize) -> f64,
) -> Result<Vec<CollapseReport>> {
    let mut ns: Vec<usize> = curves.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 || ns.len() != curves.len() {
        return Err(Error::InsufficientData(format!(
            "collapse needs at least three curves with distinct sizes, got {} curves over {} sizes",
            curves.len(),
            ns.len()
        )));
    }
    if let Some(c) = curves.iter().find(|c| c.points.len() < 2) {
        return Err(Error::InsufficientData(format!("curve at n = {} has fewer than two points", c.n)));
    }
    let mut out = Vec::with_capacity(exponents.len());
    for &e in exponents {
        let rescaled: Vec<(usize, Vec<f64>, Vec<f64>)> = curves
            .iter()
            .map(|c| {
                let shift = scale(c.n).ln() - e * (c.n as f64).ln();
                let mut pts: Vec<(f64, f64)> = c.points.iter().map(|&(k, y)| (k.ln() + shift, y)).collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (xs, ys) = pts.into_iter().unzip();
                (c.n, xs, ys)
            })
            .collect();
        let lo = rescaled.iter().map(|(_, xs, _)| xs[0]).fold(f64::NEG_INFINITY, f64::max);
        let hi = rescaled.iter().map(|(_, xs, _)| xs[xs.len() - 1]).fold(f64::INFINITY, f64::min);
        if !(lo < hi) {
            out.push(CollapseReport { exponent: e, error: None, lo, hi, grid: Vec::new(), curves: Vec::new() });
            continue;
        }
        let grid: Vec<f64> =
            (0..COLLAPSE_GRID).map(|g| lo + (hi - lo) * g as f64 / (COLLAPSE_GRID - 1) as f64).collect();
        let interp: Vec<(usize, Vec<f64>)> = rescaled
            .iter()
            .map(|(n, xs, ys)| {
                let vals = grid
                    .iter()
                    .map(|&x| interpolate(xs, ys, x.clamp(xs[0], xs[xs.len() - 1])).expect("inside range"))
                    .collect();
                (*n, vals)
            })
            .collect();
        let error = (0..grid.len())
            .map(|g| {
                let col = interp.iter().map(|(_, v)| v[g]);
                let hi = col.clone().fold(f64::NEG_INFINITY, f64::max);
                let lo = col.fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max);
        out.push(CollapseReport { exponent: e, error: Some(error), lo, hi, grid, curves: interp });
    }
    Ok(out)
}

/// Exponent with the smallest defined collapse error.
pub fn best_exponent(reports: &[CollapseReport]) -> Option<f64> {
    reports
        .iter()
        .filter_map(|r| r.error.map(|e| (r.exponent, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|p| p.0)
}

/// Collapse error of the report whose exponent is within `1e-9` of `e`.
pub fn error_at(reports: &[CollapseReport], e: f64) -> Option<f64> {
    reports.iter().find(|r| (r.exponent - e).abs() < 1e-9).and_then(|r| r.error)
}

/// One row per exponent.
pub fn collapse_csv(reports: &[CollapseReport]) -> String {
    let mut s = String::from("exponent,error,lo,hi,note\n");
    for r in reports {
        let (err, note) = match r.error {
            Some(e) => (e.to_string(), ""),
            None => (String::new(), "insufficient abscissa overlap"),
        };
        let _ = writeln!(s, "{},{},{},{},{}", r.exponent, err, r.lo, r.hi, note);
    }
    s
}

/// The rescaled curves on the common grid, long format.
pub fn collapse_curves_csv(reports: &[CollapseReport]) -> String {
    let mut s = String::from("exponent,n,x,overlap\n");
    for r in reports {
        for (n, vals) in &r.curves {
            for (x, y) in r.grid.iter().zip(vals) {
                let _ = writeln!(s, "{},{},{},{}", r.exponent, n, x, y);
            }
        }
    }
    s
}

/// Abscissa factor `min(j, N - j)^{2/3}` for eigenvector index `j`.
pub fn index_scale(j: usize) -> impl Fn(usize) -> f64 {
    move |n| (j.min(n.saturating_sub(j)).max(1) as f64).powf(2.0 / 3.0)
}
