//! Standard-type entry distributions, sparsification and random regular graphs.
//!
//! Entries are produced by inverse transform from one open-uniform draw per
//! entry, so two families sampled with the same seed are coupled entry by
//! entry. Sparsification masks compare their own per-entry uniforms against
//! `γ/n`, which makes masks for increasing `γ` nested under a shared seed.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics::rng::{normal_quantile, open01, seeded};
use crate::numerics::Matrix;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Attempts allowed to the pairing model before giving up.
pub const PAIRING_RETRY_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    Rademacher,
    UniformSymmetric,
    /// `(B − p)/√(p(1−p))` with `B ~ Bernoulli(p)`.
    ShiftedBernoulli { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: Family,
    pub sixth_moment_bound: f64,
}

impl EnsembleSpec {
    pub fn new(family: Family) -> Result<Self> {
        if let Family::ShiftedBernoulli { p } = family {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::param("p", format!("{p} is not in (0, 1)")));
            }
        }
        let mut spec = Self {
            family,
            sixth_moment_bound: 0.0,
        };
        spec.sixth_moment_bound = spec.abs_moment(6);
        Ok(spec)
    }

    pub fn gaussian() -> Self {
        Self::new(Family::Gaussian).expect("valid family")
    }

    pub fn rademacher() -> Self {
        Self::new(Family::Rademacher).expect("valid family")
    }

    pub fn uniform() -> Self {
        Self::new(Family::UniformSymmetric).expect("valid family")
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(Family::ShiftedBernoulli { p })
    }

    /// `E|X|^k` in closed form.
    pub fn abs_moment(&self, k: u32) -> f64 {
        let kf = k as f64;
        match self.family {
            Family::Gaussian => {
                2f64.powf(kf / 2.0) * gamma((kf + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
            }
            Family::Rademacher => 1.0,
            Family::UniformSymmetric => SQRT3.powf(kf) / (kf + 1.0),
            Family::ShiftedBernoulli { p } => {
                let q = 1.0 - p;
                (p * q.powf(kf) + q * p.powf(kf)) / (p * q).powf(kf / 2.0)
            }
        }
    }

    /// `E X^k` in closed form.
    pub fn moment(&self, k: u32) -> f64 {
        if k.is_multiple_of(2) {
            return self.abs_moment(k);
        }
        match self.family {
            Family::ShiftedBernoulli { p } => {
                let q = 1.0 - p;
                let kf = k as f64;
                (p * q.powf(kf) - q * p.powf(kf)) / (p * q).powf(kf / 2.0)
            }
            _ => 0.0,
        }
    }

    /// Quantile map from an open-uniform variate.
    #[inline]
    pub fn from_uniform(&self, u: f64) -> f64 {
        match self.family {
            Family::Gaussian => normal_quantile(u),
            Family::Rademacher => {
                if u >= 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::UniformSymmetric => SQRT3 * (2.0 * u - 1.0),
            Family::ShiftedBernoulli { p } => {
                let s = (p * (1.0 - p)).sqrt();
                if u >= 1.0 - p {
                    (1.0 - p) / s
                } else {
                    -p / s
                }
            }
        }
    }

    #[inline]
    pub fn draw<R: rand::RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.from_uniform(open01(rng))
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Gaussian => write!(f, "gaussian"),
            Family::Rademacher => write!(f, "rademacher"),
            Family::UniformSymmetric => write!(f, "uniform"),
            Family::ShiftedBernoulli { p } => write!(f, "bernoulli:p={p}"),
        }
    }
}

impl FromStr for EnsembleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "gaussian" => Ok(Self::gaussian()),
            "rademacher" => Ok(Self::rademacher()),
            "uniform" | "uniform-symmetric" => Ok(Self::uniform()),
            other => {
                let rest = other
                    .strip_prefix("bernoulli:p=")
                    .or_else(|| other.strip_prefix("shifted-bernoulli:p="))
                    .ok_or_else(|| Error::param("ensemble", format!("unknown ensemble `{other}`")))?;
                let p: f64 = rest
                    .parse()
                    .map_err(|_| Error::param("ensemble", format!("bad p in `{other}`")))?;
                Self::bernoulli(p)
            }
        }
    }
}

/// Divisor applied when a consumer reads the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Unit,
    SqrtRows,
    SqrtCols,
    SqrtGamma,
}

impl Scale {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scale::Unit => "1",
            Scale::SqrtRows => "sqrt_m",
            Scale::SqrtCols => "sqrt_n",
            Scale::SqrtGamma => "sqrt_gamma",
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "unit" => Ok(Scale::Unit),
            "sqrt_m" | "m" => Ok(Scale::SqrtRows),
            "sqrt_n" | "n" => Ok(Scale::SqrtCols),
            "sqrt_gamma" | "gamma" => Ok(Scale::SqrtGamma),
            other => Err(Error::param("scale", format!("unknown scale `{other}`"))),
        }
    }
}

/// An `m × n` matrix of raw draws together with how it was produced and how
/// it must be scaled on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
    /// Absent for deterministic or deserialized matrices.
    pub ensemble: Option<EnsembleSpec>,
    pub seed: u64,
    pub gamma: Option<f64>,
    pub scale: Scale,
}

impl SampledMatrix {
    /// Wraps explicit entries (no ensemble provenance).
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>, scale: Scale) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            ensemble: None,
            seed: 0,
            gamma: None,
            scale,
        })
    }

    pub fn with_scale(mut self, scale: Scale) -> Result<Self> {
        if scale == Scale::SqrtGamma && self.gamma.is_none() {
            return Err(Error::param("scale", "sqrt_gamma needs a sparsified matrix"));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn divisor(&self) -> f64 {
        match self.scale {
            Scale::Unit => 1.0,
            Scale::SqrtRows => (self.rows as f64).sqrt(),
            Scale::SqrtCols => (self.cols as f64).sqrt(),
            Scale::SqrtGamma => self.gamma.map_or(1.0, f64::sqrt),
        }
    }

    /// Raw entries as a matrix, no scaling.
    pub fn raw(&self) -> Matrix {
        Matrix::from_vec(self.rows, self.cols, self.entries.clone()).expect("consistent dims")
    }

    /// Entries divided by the recorded divisor.
    pub fn scaled(&self) -> Matrix {
        let d = self.divisor();
        Matrix::from_vec(
            self.rows,
            self.cols,
            self.entries.iter().map(|v| v / d).collect(),
        )
        .expect("consistent dims")
    }

    /// Writes the documented CSV layout: a `m,n,scale,gamma` header, one
    /// metadata row, then `m` rows of `n` entries.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,n,scale,gamma")?;
        let g = self.gamma.map(|g| g.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", self.rows, self.cols, self.scale.as_str(), g)?;
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Parse {
                    line: 0,
                    message: format!("missing {what}"),
                }),
            }
        };
        let (ln, header) = next("header")?;
        if header.trim() != "m,n,scale,gamma" {
            return Err(Error::Parse {
                line: ln,
                message: format!("unexpected header `{header}`"),
            });
        }
        let (ln, meta) = next("metadata row")?;
        let f: Vec<&str> = meta.split(',').map(str::trim).collect();
        let bad = |message: String| Error::Parse { line: ln, message };
        if f.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", f.len())));
        }
        let rows: usize = f[0].parse().map_err(|_| bad("bad m".into()))?;
        let cols: usize = f[1].parse().map_err(|_| bad("bad n".into()))?;
        let scale: Scale = f[2].parse().map_err(|e: Error| bad(e.to_string()))?;
        let gamma = if f[3].is_empty() {
            None
        } else {
            Some(f[3].parse::<f64>().map_err(|_| bad("bad gamma".into()))?)
        };
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, line) = next("matrix row")?;
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse {
                line: ln,
                message: e.to_string(),
            })?;
            if vals.len() != cols {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("expected {cols} entries, got {}", vals.len()),
                });
            }
            entries.extend(vals);
        }
        let mut m = Self::from_entries(rows, cols, entries, Scale::Unit)?;
        m.gamma = gamma;
        m.with_scale(scale)
    }
}

/// `m × n` matrix with i.i.d. entries from `spec`.
pub fn sample_standard(spec: &EnsembleSpec, m: usize, n: usize, seed: u64) -> Result<SampledMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::dim(format!("cannot sample a {m}x{n} matrix")));
    }
    let mut rng = seeded(seed);
    let entries = (0..m * n).map(|_| spec.draw(&mut rng)).collect();
    Ok(SampledMatrix {
        rows: m,
        cols: n,
        entries,
        ensemble: Some(*spec),
        seed,
        gamma: None,
        scale: Scale::Unit,
    })
}

/// Keeps each entry independently with probability `γ/n` (`n` = columns).
pub fn sparsify(matrix: &SampledMatrix, gamma: f64, seed: u64) -> Result<SampledMatrix> {
    if matrix.gamma.is_some() {
        return Err(Error::param("gamma", "matrix is already sparsified"));
    }
    let n = matrix.cols as f64;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", format!("{gamma} must be positive")));
    }
    if gamma > n {
        return Err(Error::param(
            "gamma",
            format!("{gamma} exceeds n = {n}, keep probability would exceed 1"),
        ));
    }
    let keep = gamma / n;
    let mut rng = seeded(seed);
    let entries = matrix
        .entries
        .iter()
        .map(|&v| if open01(&mut rng) < keep { v } else { 0.0 })
        .collect();
    Ok(SampledMatrix {
        entries,
        gamma: Some(gamma),
        ..matrix.clone()
    })
}

/// Symmetric signed adjacency matrix of a uniformly random simple `d`-regular
/// graph on `n` vertices; nonzeros are `±1/√d` with independent fair signs.
pub fn sample_regular_graph_matrix(n: usize, d: usize, seed: u64) -> Result<SampledMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::dim("n and d must be positive"));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::param("d", format!("n*d = {} is odd", n * d)));
    }
    if d >= n {
        return Err(Error::param("d", format!("degree {d} must be below n = {n}")));
    }
    let mut rng = seeded(seed);
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    let mut adj = vec![false; n * n];
    for _ in 0..PAIRING_RETRY_BUDGET {
        points.shuffle(&mut rng);
        adj.iter_mut().for_each(|a| *a = false);
        let simple = points.chunks_exact(2).all(|pair| {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adj[u * n + v] {
                return false;
            }
            adj[u * n + v] = true;
            adj[v * n + u] = true;
            true
        });
        if !simple {
            continue;
        }
        let w = 1.0 / (d as f64).sqrt();
        let mut entries = vec![0.0; n * n];
        let mut edges: Vec<(usize, usize)> = points
            .chunks_exact(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        edges.sort_unstable();
        for (u, v) in edges {
            let s = if open01(&mut rng) < 0.5 { -w } else { w };
            entries[u * n + v] = s;
            entries[v * n + u] = s;
        }
        return Ok(SampledMatrix {
            rows: n,
            cols: n,
            entries,
            ensemble: None,
            seed,
            gamma: None,
            scale: Scale::Unit,
        });
    }
    Err(Error::RetryBudgetExhausted {
        attempts: PAIRING_RETRY_BUDGET,
    })
}

/// Sample moments about zero over every stored entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Second moment about zero; equals the variance for centered families.
    pub variance: f64,
    pub third_abs: f64,
    pub sixth: f64,
}

pub fn moments_of(values: &[f64]) -> Moments {
    if values.is_empty() {
        return Moments {
            mean: 0.0,
            variance: 0.0,
            third_abs: 0.0,
            sixth: 0.0,
        };
    }
    let k = values.len() as f64;
    let (mut s1, mut s2, mut s3, mut s6) = (0.0, 0.0, 0.0, 0.0);
    for &v in values {
        let v2 = v * v;
        s1 += v;
        s2 += v2;
        s3 += v2 * v.abs();
        s6 += v2 * v2 * v2;
    }
    Moments {
        mean: s1 / k,
        variance: s2 / k,
        third_abs: s3 / k,
        sixth: s6 / k,
    }
}

pub fn empirical_moments(matrix: &SampledMatrix) -> Moments {
    moments_of(&matrix.entries)
}
