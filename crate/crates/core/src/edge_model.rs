//! Deterministic edge data: the semicircle transform, its deformation by the
//! correction term (and an optional quartic coefficient), the edge location,
//! typical eigenvalue locations and rigidity residuals.
//!
//! The deformed transform `m_*` is the root of
//! `P(z, y) = 1 + z y + (1 + chi) y^2 + c y^4` that behaves like `-1/z` for
//! large `Im z`. With `c = 0` it is the semicircle transform rescaled to the
//! support `[-2 sqrt(1 + chi), 2 sqrt(1 + chi)]`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::EigenPairs;

/// Height used to read the density off the transform.
pub const DENSITY_ETA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeModel {
    /// Deterministic edge `L` (the edge of the model at `chi = 0`).
    pub l0: f64,
    /// Correction term.
    pub chi: f64,
    /// Coefficient of `y^4`.
    pub quartic: Option<f64>,
    pub n: usize,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesValue {
    pub z: Complex64,
    pub m: Complex64,
}

impl EdgeModel {
    /// Model without quartic term.
    pub fn new(n: usize, q: f64, chi: f64) -> Result<Self> {
        Self::with_quartic(n, q, chi, None)
    }

    pub fn with_quartic(n: usize, q: f64, chi: f64, quartic: Option<f64>) -> Result<Self> {
        if !(chi > -1.0) || !chi.is_finite() {
            return Err(Error::InvalidArgument(format!("correction term {chi} must exceed -1")));
        }
        let quartic = quartic.filter(|&c| c != 0.0);
        if let Some(c) = quartic {
            let s = 1.0 + chi;
            if s * s + 12.0 * c <= 0.0 || !c.is_finite() {
                return Err(Error::InvalidArgument(format!("quartic coefficient {c} has no real edge")));
            }
            if 1.0 + 12.0 * c <= 0.0 {
                return Err(Error::InvalidArgument(format!("quartic coefficient {c} has no real edge")));
            }
        }
        let l0 = edge_of(1.0, quartic.unwrap_or(0.0));
        Ok(Self { l0, chi, quartic, n, q })
    }

    /// `1 + chi`, the coefficient of `y^2`.
    pub fn s(&self) -> f64 {
        1.0 + self.chi
    }

    pub fn c(&self) -> f64 {
        self.quartic.unwrap_or(0.0)
    }
}

/// Edge of `1 + z y + s y^2 + c y^4`: solve `P = dP/dy = 0` on the real axis.
fn edge_of(s: f64, c: f64) -> f64 {
    // y^2 = (-s + sqrt(s^2 + 12c)) / (6c), written without cancellation
    let y2 = 2.0 / (s + (s * s + 12.0 * c).sqrt());
    let y = y2.sqrt();
    y * (2.0 * s + 4.0 * c * y2)
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::NonPositiveImaginary(z.im));
    }
    Ok(())
}

/// Semicircle Stieltjes transform, the root of `1 + z m + m^2` with `Im m > 0`.
pub fn m_sc(z: Complex64) -> Result<Complex64> {
    check_upper(z)?;
    let two = Complex64::new(2.0, 0.0);
    let s = (z - two).sqrt() * (z + two).sqrt();
    // product of the two roots is 1; take the reciprocal of the large one
    let m = -2.0 / (z + s);
    herglotz(z, m)
}

fn herglotz(z: Complex64, m: Complex64) -> Result<Complex64> {
    if m.im > 0.0 {
        Ok(m)
    } else {
        Err(Error::BranchTracking { re: z.re, im: z.im })
    }
}

fn poly(z: Complex64, s: f64, c: f64, y: Complex64) -> (Complex64, Complex64) {
    let y2 = y * y;
    let p = 1.0 + z * y + s * y2 + c * y2 * y2;
    let dp = z + 2.0 * s * y + 4.0 * c * y2 * y;
    (p, dp)
}

fn newton(z: Complex64, s: f64, c: f64, mut y: Complex64) -> Option<Complex64> {
    for _ in 0..60 {
        let (p, dp) = poly(z, s, c, y);
        if dp.norm() == 0.0 {
            return None;
        }
        let step = p / dp;
        y -= step;
        if step.norm() <= 1e-15 * y.norm().max(1e-300) {
            return Some(y);
        }
    }
    let (p, _) = poly(z, s, c, y);
    (p.norm() < 1e-12).then_some(y)
}

/// All four roots of `1 + z y + s y^2 + c y^4` (Durand–Kerner on the monic form).
fn quartic_roots(z: Complex64, s: f64, c: f64) -> Vec<Complex64> {
    let coeffs = [Complex64::new(1.0 / c, 0.0), z / c, Complex64::new(s / c, 0.0), Complex64::new(0.0, 0.0)];
    let eval = |y: Complex64| ((y * y + coeffs[2]) * y + coeffs[1]) * y + coeffs[0];
    let radius = 1.0 + coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..4).map(|k| seed.powu(k as u32) * radius * 0.5).collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                roots[i] += Complex64::new(1e-8, 1e-8);
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    roots
}

/// Deformed Stieltjes transform of the model.
pub fn m_star(z: Complex64, model: &EdgeModel) -> Result<Complex64> {
    check_upper(z)?;
    let s = model.s();
    let c = model.c();
    if c == 0.0 {
        let r = s.sqrt();
        let m = m_sc(z / r)? / r;
        return herglotz(z, m);
    }
    // follow the root from high above the real axis down to z
    let top = 10.0 + 2.0 * z.norm();
    let start = Complex64::new(z.re, top.max(z.im));
    let guess = -1.0 / start;
    let mut y = newton(start, s, c, guess).ok_or(Error::BranchTracking { re: start.re, im: start.im })?;
    let mut im = start.im;
    let mut ratio: f64 = 0.8;
    while im > z.im {
        let next_im = (im * ratio).max(z.im);
        let zn = Complex64::new(z.re, next_im);
        let zp = Complex64::new(z.re, im);
        let (_, dp) = poly(zp, s, c, y);
        let predicted = y - y * (zn - zp) / dp;
        match newton(zn, s, c, predicted) {
            Some(yn) if (yn - predicted).norm() <= 0.1 * (yn.norm() + 1e-3) => {
                y = yn;
                im = next_im;
                ratio = (ratio * 0.8).max(0.5);
            }
            _ => {
                ratio = ratio.sqrt();
                if ratio > 1.0 - 1e-9 {
                    return Err(Error::BranchTracking { re: z.re, im });
                }
            }
        }
    }
    // the tracked root must be isolated from the others
    let roots = quartic_roots(z, s, c);
    let nearest = roots.iter().map(|r| (r - y).norm()).fold(f64::INFINITY, f64::min);
    let second = {
        let mut d: Vec<f64> = roots.iter().map(|r| (r - y).norm()).collect();
        d.sort_by(f64::total_cmp);
        d[1]
    };
    if nearest > 1e-6 * (1.0 + y.norm()) || second < 1e-10 {
        return Err(Error::BranchTracking { re: z.re, im: z.im });
    }
    herglotz(z, y)
}

/// Right edge of the support (the edge with the correction term included).
pub fn edge_location(model: &EdgeModel) -> f64 {
    edge_of(model.s(), model.c())
}

/// Density of the model at real `e`.
pub fn density(model: &EdgeModel, e: f64) -> Result<f64> {
    let edge = edge_location(model);
    if e.abs() >= edge {
        return Ok(0.0);
    }
    if model.c() == 0.0 {
        let u = e / edge;
        return Ok(2.0 / (std::f64::consts::PI * edge) * (1.0 - u * u).sqrt());
    }
    let m = m_star(Complex64::new(e, DENSITY_ETA), model)?;
    Ok(m.im / std::f64::consts::PI)
}

/// Semicircle distribution function on `[-1, 1]` after rescaling `x = u * edge`.
fn semicircle_cdf_unit(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / std::f64::consts::PI
}

/// Composite Gauss–Legendre quadrature of the density in `theta`, with
/// `E = edge * cos(theta)`.
struct MassTable {
    edge: f64,
    /// Panel boundaries in theta.
    thetas: Vec<f64>,
    /// Mass above `edge * cos(thetas[p])`, normalized to total 1.
    cumulative: Vec<f64>,
    total: f64,
}

const GL_NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];

impl MassTable {
    fn new(model: &EdgeModel, panels: usize) -> Result<Self> {
        let edge = edge_location(model);
        let thetas: Vec<f64> = (0..=panels).map(|p| std::f64::consts::PI * p as f64 / panels as f64).collect();
        let mut cumulative = vec![0.0; panels + 1];
        for p in 0..panels {
            cumulative[p + 1] = cumulative[p] + Self::panel(model, edge, thetas[p], thetas[p + 1])?;
        }
        let total = cumulative[panels];
        if !(total > 0.0) {
            return Err(Error::Quadrature("density integrates to zero".into()));
        }
        for v in cumulative.iter_mut() {
            *v /= total;
        }
        Ok(Self { edge, thetas, cumulative, total })
    }

    fn panel(model: &EdgeModel, edge: f64, a: f64, b: f64) -> Result<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let t = mid + half * x;
            acc += w * density(model, edge * t.cos())? * edge * t.sin();
        }
        Ok(acc * half)
    }

    /// Normalized mass above `edge * cos(theta)`.
    fn mass_at(&self, model: &EdgeModel, theta: f64) -> Result<f64> {
        let panels = self.thetas.len() - 1;
        let p = ((theta / std::f64::consts::PI * panels as f64).floor() as usize).min(panels - 1);
        let partial = Self::panel(model, self.edge, self.thetas[p], theta)?;
        Ok(self.cumulative[p] + partial / self.total)
    }
}

/// Mass of the model's density on `[e, edge]`.
pub fn mass_above(model: &EdgeModel, e: f64) -> Result<f64> {
    let edge = edge_location(model);
    if e >= edge {
        return Ok(0.0);
    }
    if e <= -edge {
        return Ok(1.0);
    }
    if model.c() == 0.0 {
        return Ok(1.0 - semicircle_cdf_unit(e / edge));
    }
    let table = MassTable::new(model, 2048)?;
    table.mass_at(model, (e / edge).acos())
}

/// Typical locations `gamma_1 >= ... >= gamma_n` with
/// `mass_above(gamma_i) = (i - 1) / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub gammas: Vec<f64>,
}

impl QuantileTable {
    /// `index,gamma` rows with 1-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,gamma\n");
        for (i, g) in self.gammas.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, g);
        }
        out
    }
}

fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    // f increasing on [lo, hi] with f(lo) <= 0 <= f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn quantiles(model: &EdgeModel, n: usize) -> Result<QuantileTable> {
    if n < 2 {
        return Err(Error::InvalidArgument("quantile table needs n >= 2".into()));
    }
    let edge = edge_location(model);
    let mut gammas = Vec::with_capacity(n);
    gammas.push(edge);
    if model.c() == 0.0 {
        for i in 2..=n {
            let p = (i - 1) as f64 / n as f64;
            // mass above u is 1 - cdf(u), decreasing in u
            let u = bisect(-1.0, 1.0, |u| Ok(p - (1.0 - semicircle_cdf_unit(u))))?;
            gammas.push(u * edge);
        }
    } else {
        let table = MassTable::new(model, 2048)?;
        for i in 2..=n {
            let p = (i - 1) as f64 / n as f64;
            let theta = bisect(0.0, std::f64::consts::PI, |t| Ok(table.mass_at(model, t)? - p))?;
            gammas.push(edge * theta.cos());
        }
    }
    Ok(QuantileTable { gammas })
}

/// Per-index rigidity residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    /// `(i, |lambda_i - gamma_i|)`.
    pub residuals: Vec<(usize, f64)>,
    /// Residuals divided by `N^{-1/3} q^{-3} + N^{-2/3}`.
    pub normalized: Vec<(usize, f64)>,
    pub scale: f64,
}

pub fn rigidity_scale(n: usize, q: f64) -> f64 {
    let n = n as f64;
    n.powf(-1.0 / 3.0) * q.powi(-3) + n.powf(-2.0 / 3.0)
}

pub fn rigidity_report(eigs: &EigenPairs, table: &QuantileTable, q: f64) -> Result<RigidityReport> {
    let n = table.gammas.len();
    if eigs.n != n {
        return Err(Error::LengthMismatch(eigs.n, n));
    }
    let scale = rigidity_scale(n, q);
    let mut residuals = Vec::with_capacity(eigs.values.len());
    let mut normalized = Vec::with_capacity(eigs.values.len());
    for (p, &lam) in eigs.values.iter().enumerate() {
        let i = eigs.first_index + p;
        let r = (lam - table.gammas[i - 1]).abs();
        residuals.push((i, r));
        normalized.push((i, r / scale));
    }
    Ok(RigidityReport { residuals, normalized, scale })
}
