//! The sparse random ensemble, the Erdős–Rényi adjacency model, and the
//! correction term `X = Tr(H^2)/N - 1`.
//!
//! A centered sparse matrix has entries `h_ij = x_ij * y_ij / q` where `x_ij`
//! is a mean-zero unit-variance sub-Gaussian variable and `y_ij` a Bernoulli
//! variable with rate `q^2 / N`. Diagonal entries are drawn like off-diagonal
//! ones. The adjacency model has zero diagonal and off-diagonal entries
//! `zeta / q` with probability `q^2 / N`, `zeta = (1 - q^2/N)^{-1/2}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Entry, SparseSymMatrix, SymOperator};

/// Distribution family of the `x_ij` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    #[default]
    Rademacher,
    Gaussian,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformSymmetric,
}

/// Law of the `x_ij` factor, with its sub-Gaussian parameter recorded as
/// metadata (not enforced).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryLaw {
    pub kind: LawKind,
    #[serde(default = "default_subgaussian")]
    pub subgaussian_param: f64,
}

fn default_subgaussian() -> f64 {
    0.25
}

impl Default for EntryLaw {
    fn default() -> Self {
        Self::new(LawKind::Rademacher)
    }
}

impl EntryLaw {
    pub fn new(kind: LawKind) -> Self {
        Self { kind, subgaussian_param: default_subgaussian() }
    }

    /// One draw with mean 0 and variance 1.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            LawKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            LawKind::Gaussian => rng.sample(StandardNormal),
            LawKind::UniformSymmetric => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
        }
    }

    /// `E x^4`.
    pub fn fourth_moment(&self) -> f64 {
        match self.kind {
            LawKind::Rademacher => 1.0,
            LawKind::Gaussian => 3.0,
            LawKind::UniformSymmetric => 9.0 / 5.0,
        }
    }
}

/// Which matrix model an ensemble draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    CenteredSparse,
    /// Normalized adjacency matrix `A`.
    ErAdjacency,
    /// The centered adjacency matrix `Å = A - E A`.
    ErCentered,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::CenteredSparse => "centered-sparse",
            Model::ErAdjacency => "er-adjacency",
            Model::ErCentered => "er-centered",
        }
    }

    pub fn is_er(&self) -> bool {
        matches!(self, Model::ErAdjacency | Model::ErCentered)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered-sparse" => Ok(Model::CenteredSparse),
            "er-adjacency" => Ok(Model::ErAdjacency),
            "er-centered" => Ok(Model::ErCentered),
            other => Err(Error::InvalidSpec(format!("unknown model '{other}'"))),
        }
    }
}

/// Size, sparsity, entry law and model of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub q: f64,
    #[serde(default)]
    pub law: EntryLaw,
    #[serde(default)]
    pub model: Model,
}

impl EnsembleSpec {
    pub fn new(n: usize, q: f64, law: EntryLaw, model: Model) -> Result<Self> {
        let spec = Self { n, q, law, model };
        spec.validate()?;
        Ok(spec)
    }

    pub fn centered(n: usize, q: f64) -> Result<Self> {
        Self::new(n, q, EntryLaw::default(), Model::CenteredSparse)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::InvalidSpec(format!("q must be positive, got {}", self.q)));
        }
        let n = self.n as f64;
        if self.model.is_er() {
            if self.q * self.q >= n {
                return Err(Error::InvalidSpec(format!(
                    "adjacency model needs q^2 < N, got q = {}, N = {}",
                    self.q, self.n
                )));
            }
        } else if self.q > n.sqrt() * (1.0 + 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "q must lie in (0, sqrt N], got q = {}, N = {}",
                self.q, self.n
            )));
        }
        Ok(())
    }

    /// Bernoulli rate `q^2 / N`, clamped into `(0, 1]`.
    pub fn rate(&self) -> f64 {
        (self.q * self.q / self.n as f64).min(1.0)
    }

    /// `zeta = (1 - q^2/N)^{-1/2}` (adjacency models only).
    pub fn zeta(&self) -> f64 {
        (1.0 - self.q * self.q / self.n as f64).powf(-0.5)
    }

    /// One fresh draw of the entry at pair `(i, j)`, `i <= j`.
    pub fn sample_entry<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> f64 {
        if self.model.is_er() {
            if i == j {
                return 0.0;
            }
            if rng.random::<f64>() < self.rate() {
                self.zeta() / self.q
            } else {
                0.0
            }
        } else if rng.random::<f64>() < self.rate() {
            self.law.sample(rng) / self.q
        } else {
            0.0
        }
    }

    /// Draws the stored matrix of this model (`H` or `A`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SparseSymMatrix> {
        match self.model {
            Model::CenteredSparse => sample_sparse(self, rng),
            Model::ErAdjacency | Model::ErCentered => sample_er(self.n, self.q, rng),
        }
    }

    /// Wraps a stored matrix as the operator whose spectrum is studied.
    pub fn analysis(&self, stored: SparseSymMatrix) -> AnalysisMatrix {
        match self.model {
            Model::CenteredSparse => AnalysisMatrix::Plain(stored),
            Model::ErAdjacency => AnalysisMatrix::Adjacency(center_er(stored, self.q)),
            Model::ErCentered => AnalysisMatrix::Centered(center_er(stored, self.q)),
        }
    }
}

/// Draws a centered sparse matrix.
pub fn sample_sparse<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<SparseSymMatrix> {
    spec.validate()?;
    if spec.model != Model::CenteredSparse {
        return Err(Error::InvalidSpec(format!("sample_sparse called for model {}", spec.model)));
    }
    let n = spec.n;
    let p = spec.rate();
    let inv_q = 1.0 / spec.q;
    let mut entries = Vec::with_capacity((p * (n * (n + 1) / 2) as f64 * 1.1) as usize + 16);
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < p {
                let v = spec.law.sample(rng) * inv_q;
                if v != 0.0 {
                    entries.push(Entry { i: i as u32, j: j as u32, value: v });
                }
            }
        }
    }
    Ok(SparseSymMatrix::from_sorted_unchecked(n, entries))
}

/// Draws the normalized adjacency matrix of an Erdős–Rényi graph.
pub fn sample_er<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Result<SparseSymMatrix> {
    let spec = EnsembleSpec::new(n, q, EntryLaw::default(), Model::ErAdjacency)?;
    let p = spec.rate();
    let value = spec.zeta() / q;
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                entries.push(Entry { i: i as u32, j: j as u32, value });
            }
        }
    }
    Ok(SparseSymMatrix::from_sorted_unchecked(n, entries))
}

/// The centered adjacency matrix `Å = A - f e e^T + a I`, kept as the sparse
/// `A` plus the two scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredEr {
    pub adjacency: SparseSymMatrix,
    /// `f = zeta * q`.
    pub f: f64,
    /// `a = f / N`.
    pub a: f64,
}

/// Splits `A` into its centered part and the rank-one/diagonal mean.
pub fn center_er(adjacency: SparseSymMatrix, q: f64) -> CenteredEr {
    let n = adjacency.n() as f64;
    let zeta = (1.0 - q * q / n).powf(-0.5);
    let f = zeta * q;
    CenteredEr { adjacency, f, a: f / n }
}

impl CenteredEr {
    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    /// Entry `Å_ij`.
    pub fn centered_entry(&self, i: usize, j: usize) -> f64 {
        let mean_part = self.f / self.n() as f64;
        let diag = if i == j { self.a } else { 0.0 };
        self.adjacency.get(i, j) - mean_part + diag
    }

    /// Dense `Å`.
    pub fn centered_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut d = self.adjacency.to_dense();
        let shift = self.f / n as f64;
        d.add_scalar_mut(-shift);
        for i in 0..n {
            d[(i, i)] += self.a;
        }
        d
    }

    /// Correction term of `Å`.
    pub fn correction_term(&self) -> CorrectionTerm {
        let n = self.n() as f64;
        let c = self.f / n;
        let diag_sq: f64 = self
            .adjacency
            .entries()
            .iter()
            .filter(|e| e.i == e.j)
            .map(|e| {
                let d = e.value - c + self.a;
                d * d - (c - self.a).powi(2)
            })
            .sum();
        let off_sum: f64 = self.adjacency.entries().iter().filter(|e| e.i != e.j).map(|e| e.value).sum();
        let off_sq: f64 = self
            .adjacency
            .entries()
            .iter()
            .filter(|e| e.i != e.j)
            .map(|e| e.value * e.value)
            .sum();
        // sum over i != j of (a_ij - c)^2 plus the diagonal (a_ii - c + a)^2
        let off = 2.0 * off_sq - 4.0 * c * off_sum + c * c * n * (n - 1.0);
        let diag = n * (c - self.a).powi(2) + diag_sq;
        CorrectionTerm { value: (off + diag) / n - 1.0 }
    }
}

impl SymOperator for CenteredEr {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.adjacency.apply(x, y);
        let shift = self.f / self.n() as f64 * x.iter().sum::<f64>();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += self.a * xi - shift;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.centered_dense()
    }
}

/// The scalar `X = Tr(H^2)/N - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTerm {
    pub value: f64,
}

/// `X = ||H||_F^2 / N - 1` over the full symmetric matrix.
pub fn correction_term(h: &SparseSymMatrix) -> CorrectionTerm {
    CorrectionTerm { value: h.frobenius_sq() / h.n() as f64 - 1.0 }
}

/// The operator whose spectrum an experiment studies, plus its correction term.
#[derive(Debug, Clone)]
pub enum AnalysisMatrix {
    /// Centered sparse `H`.
    Plain(SparseSymMatrix),
    /// Adjacency `A`; the correction term is that of `Å`.
    Adjacency(CenteredEr),
    /// Centered adjacency `Å`.
    Centered(CenteredEr),
}

impl AnalysisMatrix {
    pub fn stored(&self) -> &SparseSymMatrix {
        match self {
            AnalysisMatrix::Plain(h) => h,
            AnalysisMatrix::Adjacency(c) | AnalysisMatrix::Centered(c) => &c.adjacency,
        }
    }

    pub fn correction_term(&self) -> CorrectionTerm {
        match self {
            AnalysisMatrix::Plain(h) => correction_term(h),
            AnalysisMatrix::Adjacency(c) | AnalysisMatrix::Centered(c) => c.correction_term(),
        }
    }
}

impl SymOperator for AnalysisMatrix {
    fn dim(&self) -> usize {
        self.stored().n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            AnalysisMatrix::Plain(h) => h.apply(x, y),
            AnalysisMatrix::Adjacency(c) => c.adjacency.apply(x, y),
            AnalysisMatrix::Centered(c) => c.apply(x, y),
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            AnalysisMatrix::Plain(h) => h.to_dense(),
            AnalysisMatrix::Adjacency(c) => c.adjacency.to_dense(),
            AnalysisMatrix::Centered(c) => c.centered_dense(),
        }
    }
}
