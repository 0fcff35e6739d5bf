//! Generalized Lindeberg swapping: derivative-bound and integral-remainder
//! bounds on `|E f(U) − E f(V)|`, and the coordinate-by-coordinate
//! telescoping construction that realizes the gap.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ensembles::{EnsembleSpec, Family};
use crate::error::{Error, Result};
use crate::harness::seed::derive_seed;
use crate::numerics::rng::{open01, seeded, standard_normal};
use crate::numerics::{gauss_hermite, gauss_legendre_on, Rule};

/// Largest tensor-product grid evaluated in exact mode.
pub const MAX_ENUMERATION: usize = 4_000_000;
pub const MAX_ATOMS: usize = 8;
pub const MAX_EXACT_ARITY: usize = 12;
pub const DEFAULT_GAUSS_NODES: usize = 64;
/// Gauss–Legendre nodes for each remainder segment integral.
pub const REMAINDER_NODES: usize = 16;

/// Distribution of a single coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ScalarLaw {
    Discrete { atoms: Vec<f64>, weights: Vec<f64> },
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ScalarLaw {
    pub fn discrete(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::param("atoms", "need as many weights as atoms, at least one"));
        }
        if atoms.len() > MAX_ATOMS {
            return Err(Error::param("atoms", format!("{} atoms exceed {MAX_ATOMS}", atoms.len())));
        }
        if atoms.iter().chain(&weights).any(|v| !v.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::param("weights", "atoms must be finite and weights nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", format!("sum to {total}, not 1")));
        }
        Ok(ScalarLaw::Discrete { atoms, weights })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
            return Err(Error::param("sd", format!("{sd} must be positive")));
        }
        Ok(ScalarLaw::Gaussian { mean, sd })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param("uniform", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(ScalarLaw::Uniform { lo, hi })
    }

    /// The standardized law of an entry family.
    pub fn from_ensemble(spec: &EnsembleSpec) -> Self {
        match spec.family {
            Family::Gaussian => ScalarLaw::Gaussian { mean: 0.0, sd: 1.0 },
            Family::Rademacher => ScalarLaw::Discrete { atoms: vec![-1.0, 1.0], weights: vec![0.5, 0.5] },
            Family::UniformSymmetric => {
                let r = 3f64.sqrt();
                ScalarLaw::Uniform { lo: -r, hi: r }
            }
            Family::ShiftedBernoulli { p } => {
                let s = (p * (1.0 - p)).sqrt();
                ScalarLaw::Discrete { atoms: vec![-p / s, (1.0 - p) / s], weights: vec![1.0 - p, p] }
            }
        }
    }

    /// `E X^k`.
    pub fn moment(&self, k: u32) -> f64 {
        match self {
            ScalarLaw::Discrete { atoms, weights } => atoms.iter().zip(weights).map(|(a, w)| w * a.powi(k as i32)).sum(),
            ScalarLaw::Gaussian { mean, sd } => {
                // Σ_j C(k, j) μ^{k−j} σ^j E Z^j with E Z^j = (j−1)!! for even j
                let mut total = 0.0;
                let mut binom = 1.0;
                let mut dfact = 1.0;
                for j in 0..=k {
                    if j > 0 {
                        binom *= (k - j + 1) as f64 / j as f64;
                    }
                    if j % 2 == 0 {
                        if j >= 2 {
                            dfact *= (j - 1) as f64;
                        }
                        total += binom * mean.powi((k - j) as i32) * sd.powi(j as i32) * dfact;
                    }
                }
                total
            }
            ScalarLaw::Uniform { lo, hi } => {
                let k1 = (k + 1) as i32;
                (hi.powi(k1) - lo.powi(k1)) / ((k + 1) as f64 * (hi - lo))
            }
        }
    }

    /// `E|X|³`.
    pub fn abs_moment3(&self) -> f64 {
        match self {
            ScalarLaw::Discrete { atoms, weights } => atoms.iter().zip(weights).map(|(a, w)| w * a.abs().powi(3)).sum(),
            ScalarLaw::Gaussian { mean, sd } => {
                let nu = mean / sd;
                let normal = Normal::new(0.0, 1.0).expect("standard normal");
                let tail = 1.0 - 2.0 * normal.cdf(-nu);
                let dens = (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * nu * nu).exp();
                sd.powi(3) * ((nu.powi(3) + 3.0 * nu) * tail + dens * (nu * nu + 2.0))
            }
            ScalarLaw::Uniform { lo, hi } => {
                let prim = |x: f64| x.powi(3) * x.abs() / 4.0;
                (prim(*hi) - prim(*lo)) / (hi - lo)
            }
        }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            ScalarLaw::Discrete { atoms, .. } => Some((
                atoms.iter().cloned().fold(f64::INFINITY, f64::min),
                atoms.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            )),
            ScalarLaw::Uniform { lo, hi } => Some((*lo, *hi)),
            ScalarLaw::Gaussian { .. } => None,
        }
    }

    /// Quadrature nodes and weights; exact for discrete laws, Gauss rules otherwise.
    pub fn nodes(&self, gauss_nodes: usize) -> Result<Vec<(f64, f64)>> {
        Ok(match self {
            ScalarLaw::Discrete { atoms, weights } => atoms.iter().cloned().zip(weights.iter().cloned()).collect(),
            ScalarLaw::Gaussian { mean, sd } => {
                let r = gauss_hermite(gauss_nodes)?;
                r.nodes.iter().zip(&r.weights).map(|(x, w)| (mean + sd * x, *w)).collect()
            }
            ScalarLaw::Uniform { lo, hi } => {
                let r = gauss_legendre_on(gauss_nodes, *lo, *hi)?;
                let len = hi - lo;
                r.nodes.iter().zip(&r.weights).map(|(x, w)| (*x, w / len)).collect()
            }
        })
    }

    pub fn sample<R: rand::RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Discrete { atoms, weights } => {
                let u = open01(rng);
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                *atoms.last().expect("nonempty")
            }
            ScalarLaw::Gaussian { mean, sd } => mean + sd * standard_normal(rng),
            ScalarLaw::Uniform { lo, hi } => lo + (hi - lo) * open01(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorPair {
    pub u: Vec<ScalarLaw>,
    pub v: Vec<ScalarLaw>,
}

impl VectorPair {
    pub fn new(u: Vec<ScalarLaw>, v: Vec<ScalarLaw>) -> Result<Self> {
        if u.is_empty() || u.len() != v.len() {
            return Err(Error::dim(format!("vectors of arity {} and {}", u.len(), v.len())));
        }
        Ok(Self { u, v })
    }

    /// `n` i.i.d. copies of each law.
    pub fn iid(u: ScalarLaw, v: ScalarLaw, n: usize) -> Result<Self> {
        Self::new(vec![u; n], vec![v; n])
    }

    pub fn arity(&self) -> usize {
        self.u.len()
    }

    /// `a_i = |E U_i − E V_i|`.
    pub fn a(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(u, v)| (u.moment(1) - v.moment(1)).abs()).collect()
    }

    /// `b_i = |E U_i² − E V_i²|`.
    pub fn b(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(u, v)| (u.moment(2) - v.moment(2)).abs()).collect()
    }

    /// `max_i (E|U_i|³ + E|V_i|³)`.
    pub fn m3(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u.abs_moment3() + v.abs_moment3()).fold(0.0, f64::max)
    }

    /// Per-coordinate box spanned by both supports and 0, if all are bounded.
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| {
                let (a, b) = u.support()?;
                let (c, d) = v.support()?;
                Some((a.min(c).min(0.0), b.max(d).max(0.0)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

/// Sparse multivariate polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub arity: usize,
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(arity: usize, terms: Vec<Monomial>) -> Result<Self> {
        if terms.iter().any(|t| t.exps.len() != arity || !t.coef.is_finite()) {
            return Err(Error::dim(format!("monomial exponents must have length {arity}")));
        }
        Ok(Self { arity, terms })
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum()).max().unwrap_or(0)
    }

    fn falling(e: u32, r: u32) -> f64 {
        (0..r).map(|k| (e - k) as f64).product()
    }

    /// `∂_i^r p` at `x`.
    pub fn partial(&self, i: usize, r: u32, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.exps[i] >= r)
            .map(|t| {
                let mut v = t.coef * Self::falling(t.exps[i], r);
                for (j, (&e, &xj)) in t.exps.iter().zip(x).enumerate() {
                    let e = if j == i { e - r } else { e };
                    v *= xj.powi(e as i32);
                }
                v
            })
            .sum()
    }

    /// `E p(X)` for independent coordinates, from exact moments.
    pub fn expectation(&self, laws: &[&ScalarLaw]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exps.iter().zip(laws).map(|(&e, l)| l.moment(e)).product::<f64>())
            .sum()
    }

    /// Upper bound on `max_i sup |∂_i^r p|` over a box, or `None` when unbounded.
    fn derivative_bound(&self, r: u32, domain: Option<&[(f64, f64)]>) -> Option<f64> {
        let mut best: f64 = 0.0;
        for i in 0..self.arity {
            let mut total = 0.0;
            for t in self.terms.iter().filter(|t| t.exps[i] >= r) {
                let mut v = t.coef.abs() * Self::falling(t.exps[i], r);
                for (j, &e) in t.exps.iter().enumerate() {
                    let e = if j == i { e - r } else { e };
                    if e == 0 {
                        continue;
                    }
                    let (lo, hi) = domain?[j];
                    v *= lo.abs().max(hi.abs()).powi(e as i32);
                }
                total += v;
            }
            best = best.max(total);
        }
        Some(best)
    }
}

/// `log Σ_k exp(c_k · x + d_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSumExpFn {
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
}

impl LogSumExpFn {
    pub fn new(c: Vec<Vec<f64>>, d: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.len() != d.len() {
            return Err(Error::dim("need one offset per linear form, at least one form"));
        }
        let n = c[0].len();
        if n == 0 || c.iter().any(|row| row.len() != n) {
            return Err(Error::dim("linear forms must share a positive arity"));
        }
        Ok(Self { c, d })
    }

    fn arity(&self) -> usize {
        self.c[0].len()
    }

    /// Gibbs weights `p_k ∝ exp(c_k · x + d_k)`.
    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let a: Vec<f64> = self.c.iter().zip(&self.d).map(|(ck, dk)| ck.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + dk).collect();
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = a.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let a: Vec<f64> = self.c.iter().zip(&self.d).map(|(ck, dk)| ck.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + dk).collect();
        crate::numerics::logsumexp(&a)
    }

    /// Derivatives in `x_i` are the cumulants of `c_{·i}` under the Gibbs weights.
    fn partial(&self, i: usize, r: u32, x: &[f64]) -> f64 {
        let p = self.weights(x);
        let ci: Vec<f64> = self.c.iter().map(|row| row[i]).collect();
        let mean: f64 = p.iter().zip(&ci).map(|(p, c)| p * c).sum();
        match r {
            1 => mean,
            2 => p.iter().zip(&ci).map(|(p, c)| p * (c - mean).powi(2)).sum(),
            3 => p.iter().zip(&ci).map(|(p, c)| p * (c - mean).powi(3)).sum(),
            _ => unreachable!("orders 1 to 3 only"),
        }
    }

    /// `|κ₁| ≤ max|c|`, `κ₂ ≤ w²/4`, `|κ₃| ≤ w³/4` with `w` the range of `c_{·i}`.
    fn derivative_bound(&self, r: u32) -> f64 {
        (0..self.arity())
            .map(|i| {
                let col: Vec<f64> = self.c.iter().map(|row| row[i]).collect();
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w = hi - lo;
                match r {
                    1 => lo.abs().max(hi.abs()),
                    2 => w * w / 4.0,
                    _ => w.powi(3) / 4.0,
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Polynomial(Polynomial),
    LogSumExp(LogSumExpFn),
}

impl TestFunction {
    pub fn arity(&self) -> usize {
        match self {
            TestFunction::Polynomial(p) => p.arity,
            TestFunction::LogSumExp(l) => l.arity(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Polynomial(p) => p.partial(0, 0, x),
            TestFunction::LogSumExp(l) => l.eval(x),
        }
    }

    /// `∂_i^r f(x)` for `r ∈ {1, 2, 3}`.
    pub fn partial(&self, i: usize, r: u32, x: &[f64]) -> f64 {
        match self {
            TestFunction::Polynomial(p) => p.partial(i, r, x),
            TestFunction::LogSumExp(l) => l.partial(i, r, x),
        }
    }

    /// `[L1, L2, L3]` over the box (everywhere if `None`); `None` entries are unbounded.
    pub fn derivative_bounds(&self, domain: Option<&[(f64, f64)]>) -> [Option<f64>; 3] {
        match self {
            TestFunction::Polynomial(p) => [1, 2, 3].map(|r| p.derivative_bound(r, domain)),
            TestFunction::LogSumExp(l) => [1, 2, 3].map(|r| Some(l.derivative_bound(r))),
        }
    }

    /// Named test functions of arity `n` for the command line.
    pub fn named(name: &str, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::dim("arity must be positive"));
        }
        let unit = |i: usize, e: u32| {
            let mut exps = vec![0; n];
            exps[i] = e;
            exps
        };
        let poly = |terms: Vec<Monomial>| Polynomial::new(n, terms).map(TestFunction::Polynomial);
        match name {
            "linear" => poly((0..n).map(|i| Monomial { coef: 1.0, exps: unit(i, 1) }).collect()),
            "sum-squares" => poly((0..n).map(|i| Monomial { coef: 1.0, exps: unit(i, 2) }).collect()),
            "cube" => poly(vec![Monomial { coef: 1.0, exps: unit(0, 3) }]),
            // (x₁ + 1)³
            "shifted-cube" => poly(vec![
                Monomial { coef: 1.0, exps: unit(0, 3) },
                Monomial { coef: 3.0, exps: unit(0, 2) },
                Monomial { coef: 3.0, exps: unit(0, 1) },
                Monomial { coef: 1.0, exps: vec![0; n] },
            ]),
            // (Σ x_i)³ / n^{3/2}
            "normalized-cube" => {
                let mut terms = Vec::new();
                let scale = (n as f64).powf(-1.5);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let mut exps = vec![0; n];
                            exps[i] += 1;
                            exps[j] += 1;
                            exps[k] += 1;
                            terms.push(Monomial { coef: scale, exps });
                        }
                    }
                }
                poly(terms)
            }
            "sum-quartic" => poly((0..n).map(|i| Monomial { coef: 0.25, exps: unit(i, 4) }).collect()),
            // log Σ_i e^{x_i}
            "lse" => {
                let c = (0..n).map(|i| unit(i, 1).into_iter().map(|e| e as f64).collect()).collect();
                Ok(TestFunction::LogSumExp(LogSumExpFn::new(c, vec![0.0; n])?))
            }
            other => Err(Error::param(
                "fn",
                format!("unknown test function `{other}` (linear, sum-squares, cube, shifted-cube, normalized-cube, sum-quartic, lse)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapMode {
    Exact,
    MonteCarlo,
}

impl std::str::FromStr for SwapMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(SwapMode::Exact),
            "mc" | "monte-carlo" => Ok(SwapMode::MonteCarlo),
            other => Err(Error::param("mode", format!("unknown mode `{other}` (exact, mc)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub mode: SwapMode,
    /// `E f(W_i) − E f(W_{i−1})`, `W_i = (U_1..U_i, V_{i+1}..V_n)`.
    pub increments: Vec<f64>,
    /// `Σ increments`.
    pub total: f64,
    /// `E f(U) − E f(V)` computed directly.
    pub direct: f64,
    pub bound_thm1: Option<f64>,
    pub bound_thm2: f64,
}

fn check_pair(pair: &VectorPair, f: &TestFunction) -> Result<()> {
    if pair.arity() != f.arity() {
        return Err(Error::dim(format!("pair of arity {} with a function of arity {}", pair.arity(), f.arity())));
    }
    Ok(())
}

/// Derivative-bound form: `Σ_i (a_i L1 + ½ b_i L2) + (n/6) L3 M3`.
///
/// `L_r` are suprema over the box spanned by the supports and 0 when every
/// coordinate is bounded, global suprema otherwise. A term whose moment
/// mismatch vanishes contributes 0 even if its `L_r` is unbounded.
pub fn bound_thm1(pair: &VectorPair, f: &TestFunction) -> Result<f64> {
    check_pair(pair, f)?;
    let domain = pair.bounding_box();
    let [l1, l2, l3] = f.derivative_bounds(domain.as_deref());
    let (a, b) = (pair.a(), pair.b());
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    let first = if sum_a == 0.0 { 0.0 } else { sum_a * l1.ok_or(Error::UnboundedDerivative { order: 1 })? };
    let second = if sum_b == 0.0 { 0.0 } else { 0.5 * sum_b * l2.ok_or(Error::UnboundedDerivative { order: 2 })? };
    let l3 = l3.ok_or(Error::UnboundedDerivative { order: 3 })?;
    Ok(first + second + pair.arity() as f64 / 6.0 * l3 * pair.m3())
}

/// Tensor-product enumeration of independent coordinates.
fn enumerate<F: FnMut(&[f64], f64)>(nodes: &[Vec<(f64, f64)>], mut visit: F) -> Result<()> {
    let size = nodes.iter().try_fold(1usize, |acc, v| acc.checked_mul(v.len()));
    match size {
        Some(s) if s <= MAX_ENUMERATION => {}
        _ => {
            return Err(Error::EnumerationTooLarge {
                size: nodes.iter().map(|v| v.len() as f64).product(),
                limit: MAX_ENUMERATION as f64,
            })
        }
    }
    let n = nodes.len();
    let mut idx = vec![0usize; n];
    let mut x: Vec<f64> = nodes.iter().map(|v| v[0].0).collect();
    loop {
        let w: f64 = idx.iter().zip(nodes).map(|(&k, v)| v[k].1).product();
        visit(&x, w);
        let mut j = 0;
        loop {
            if j == n {
                return Ok(());
            }
            idx[j] += 1;
            if idx[j] < nodes[j].len() {
                x[j] = nodes[j][idx[j]].0;
                break;
            }
            idx[j] = 0;
            x[j] = nodes[j][0].0;
            j += 1;
        }
    }
}

fn expectation(f: &TestFunction, laws: &[&ScalarLaw], gauss_nodes: usize) -> Result<f64> {
    if let TestFunction::Polynomial(p) = f {
        return Ok(p.expectation(laws));
    }
    let nodes: Vec<_> = laws.iter().map(|l| l.nodes(gauss_nodes)).collect::<Result<_>>()?;
    let mut total = 0.0;
    enumerate(&nodes, |x, w| total += w * f.eval(x))?;
    Ok(total)
}

/// `|∫_0^u |∂_i³ f(x with x_i = s)| (u − s)² ds|` by Gauss–Legendre.
fn remainder_integral(f: &TestFunction, i: usize, x: &[f64], u: f64, rule: &Rule) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let mut y = x.to_vec();
    let total: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| {
            // s = u (t + 1)/2 maps [−1, 1] onto the segment
            let s = 0.5 * u * (t + 1.0);
            y[i] = s;
            w * f.partial(i, 3, &y).abs() * (u - s).powi(2)
        })
        .sum();
    (0.5 * u * total).abs()
}

fn coordinate_laws(pair: &VectorPair, i: usize) -> Vec<&ScalarLaw> {
    (0..pair.arity()).map(|j| if j < i { &pair.u[j] } else { &pair.v[j] }).collect()
}

/// Integral-remainder form, each expectation by exact enumeration.
fn bound_thm2_exact(pair: &VectorPair, f: &TestFunction, gauss_nodes: usize) -> Result<f64> {
    let n = pair.arity();
    let (a, b) = (pair.a(), pair.b());
    let rule = gauss_legendre_on(REMAINDER_NODES, -1.0, 1.0)?;
    let mut total = 0.0;
    for i in 0..n {
        let laws = coordinate_laws(pair, i);
        let mut nodes: Vec<Vec<(f64, f64)>> = laws.iter().map(|l| l.nodes(gauss_nodes)).collect::<Result<_>>()?;
        let mut term = 0.0;
        if a[i] > 0.0 || b[i] > 0.0 {
            nodes[i] = vec![(0.0, 1.0)];
            let (mut e1, mut e2) = (0.0, 0.0);
            enumerate(&nodes, |x, w| {
                e1 += w * f.partial(i, 1, x).abs();
                e2 += w * f.partial(i, 2, x).abs();
            })?;
            term += a[i] * e1 + 0.5 * b[i] * e2;
        }
        for side in [&pair.u[i], &pair.v[i]] {
            nodes[i] = side.nodes(gauss_nodes)?;
            let mut r = 0.0;
            enumerate(&nodes, |x, w| r += w * remainder_integral(f, i, x, x[i], &rule))?;
            term += 0.5 * r;
        }
        total += term;
    }
    Ok(total)
}

/// Exact-mode preconditions: discrete laws within the atom cap, or
/// continuous laws with a quadrature of at least 32 nodes, and `n ≤ 12`.
fn check_exact(pair: &VectorPair, gauss_nodes: usize) -> Result<()> {
    if pair.arity() > MAX_EXACT_ARITY {
        return Err(Error::EnumerationTooLarge {
            size: pair.arity() as f64,
            limit: MAX_EXACT_ARITY as f64,
        });
    }
    let continuous = pair.u.iter().chain(&pair.v).any(|l| !matches!(l, ScalarLaw::Discrete { .. }));
    if continuous && gauss_nodes < 32 {
        return Err(Error::param("gauss_nodes", format!("{gauss_nodes} < 32 for a continuous coordinate")));
    }
    Ok(())
}

/// Telescoping swap of `V` into `U`, one coordinate at a time.
pub fn swap_experiment(
    pair: &VectorPair,
    f: &TestFunction,
    mode: SwapMode,
    trials: usize,
    seed: u64,
) -> Result<SwapReport> {
    swap_experiment_with(pair, f, mode, trials, seed, DEFAULT_GAUSS_NODES)
}

pub fn swap_experiment_with(
    pair: &VectorPair,
    f: &TestFunction,
    mode: SwapMode,
    trials: usize,
    seed: u64,
    gauss_nodes: usize,
) -> Result<SwapReport> {
    check_pair(pair, f)?;
    let n = pair.arity();
    let bound_thm1 = match bound_thm1(pair, f) {
        Ok(b) => Some(b),
        Err(Error::UnboundedDerivative { .. }) => None,
        Err(e) => return Err(e),
    };
    match mode {
        SwapMode::Exact => {
            check_exact(pair, gauss_nodes)?;
            let levels: Vec<f64> = (0..=n)
                .map(|i| expectation(f, &coordinate_laws(pair, i), gauss_nodes))
                .collect::<Result<_>>()?;
            let increments: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
            let u: Vec<&ScalarLaw> = pair.u.iter().collect();
            let v: Vec<&ScalarLaw> = pair.v.iter().collect();
            let direct = expectation(f, &u, gauss_nodes)? - expectation(f, &v, gauss_nodes)?;
            Ok(SwapReport {
                mode,
                total: increments.iter().sum(),
                increments,
                direct,
                bound_thm1,
                bound_thm2: bound_thm2_exact(pair, f, gauss_nodes)?,
            })
        }
        SwapMode::MonteCarlo => {
            if trials == 0 {
                return Err(Error::param("trials", "must be positive"));
            }
            let rule = gauss_legendre_on(REMAINDER_NODES, -1.0, 1.0)?;
            let (a, b) = (pair.a(), pair.b());
            let mut inc = vec![0.0; n];
            let mut direct = 0.0;
            let mut thm2 = 0.0;
            for t in 0..trials {
                let mut rng = seeded(derive_seed(seed, &["lindeberg", "swap"], t as u64));
                let us: Vec<f64> = pair.u.iter().map(|l| l.sample(&mut rng)).collect();
                let vs: Vec<f64> = pair.v.iter().map(|l| l.sample(&mut rng)).collect();
                let mut w = vs.clone();
                let mut prev = f.eval(&w);
                direct += f.eval(&us) - prev;
                for i in 0..n {
                    // w = W_{i} with coordinate i still from V
                    let mut w0 = w.clone();
                    w0[i] = 0.0;
                    thm2 += a[i] * f.partial(i, 1, &w0).abs() + 0.5 * b[i] * f.partial(i, 2, &w0).abs();
                    thm2 += 0.5 * remainder_integral(f, i, &w0, us[i], &rule);
                    thm2 += 0.5 * remainder_integral(f, i, &w0, vs[i], &rule);
                    w[i] = us[i];
                    let cur = f.eval(&w);
                    inc[i] += cur - prev;
                    prev = cur;
                }
            }
            let k = trials as f64;
            let increments: Vec<f64> = inc.iter().map(|v| v / k).collect();
            Ok(SwapReport {
                mode,
                total: increments.iter().sum(),
                increments,
                direct: direct / k,
                bound_thm1,
                bound_thm2: thm2 / k,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub gap: f64,
    pub bound_thm1: Option<f64>,
    pub bound_thm2: f64,
    pub satisfied_thm1: Option<bool>,
    pub satisfied_thm2: bool,
    /// Every available bound holds.
    pub satisfied: bool,
}

/// `|gap| ≤ bound` up to relative `1e-9` and absolute `1e-12` rounding slack.
pub fn bound_holds(gap: f64, bound: f64) -> bool {
    gap.abs() <= bound * (1.0 + 1e-9) + 1e-12
}

pub fn verify_bound(pair: &VectorPair, f: &TestFunction, mode: SwapMode, trials: usize, seed: u64) -> Result<BoundCheck> {
    let r = swap_experiment(pair, f, mode, trials, seed)?;
    let gap = r.direct;
    let holds = |b: f64| bound_holds(gap, b);
    let satisfied_thm1 = r.bound_thm1.map(holds);
    let satisfied_thm2 = holds(r.bound_thm2);
    Ok(BoundCheck {
        gap,
        bound_thm1: r.bound_thm1,
        bound_thm2: r.bound_thm2,
        satisfied_thm1,
        satisfied_thm2,
        satisfied: satisfied_thm2 && satisfied_thm1.unwrap_or(true),
    })
}

/// A random discrete law with 2–4 atoms in `[−2, 2]`.
fn random_discrete<R: rand::RngCore>(rng: &mut R) -> ScalarLaw {
    let k = 2 + (open01(rng) * 3.0) as usize;
    let atoms: Vec<f64> = (0..k).map(|_| 4.0 * open01(rng) - 2.0).collect();
    let raw: Vec<f64> = (0..k).map(|_| open01(rng) + 0.05).collect();
    let s: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / s).collect();
    // absorb rounding so the weights sum to 1 exactly enough for validation
    let last = 1.0 - weights[..k - 1].iter().sum::<f64>();
    weights[k - 1] = last;
    ScalarLaw::Discrete { atoms, weights }
}

/// Random test case: `n ≤ 6` coordinates with independent random discrete
/// laws and a random polynomial of total degree at most 3.
pub fn random_case(seed: u64) -> (VectorPair, TestFunction) {
    let mut rng = seeded(seed);
    let n = 1 + (open01(&mut rng) * 6.0) as usize;
    let u = (0..n).map(|_| random_discrete(&mut rng)).collect();
    let v = (0..n).map(|_| random_discrete(&mut rng)).collect();
    let terms = 1 + (open01(&mut rng) * 8.0) as usize;
    let monomials = (0..terms)
        .map(|_| {
            let degree = 1 + (open01(&mut rng) * 3.0) as usize;
            let mut exps = vec![0u32; n];
            for _ in 0..degree {
                exps[(open01(&mut rng) * n as f64) as usize] += 1;
            }
            Monomial { coef: standard_normal(&mut rng), exps }
        })
        .collect();
    (
        VectorPair { u, v },
        TestFunction::Polynomial(Polynomial { arity: n, terms: monomials }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rademacher() -> ScalarLaw {
        ScalarLaw::from_ensemble(&EnsembleSpec::rademacher())
    }

    fn gaussian() -> ScalarLaw {
        ScalarLaw::gaussian(0.0, 1.0).unwrap()
    }

    #[test]
    fn law_moments() {
        let g = gaussian();
        assert_eq!(g.moment(4), 3.0);
        assert!((g.abs_moment3() - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        let shifted = ScalarLaw::gaussian(0.7, 1.3).unwrap();
        let nodes = shifted.nodes(64).unwrap();
        for k in 0..6 {
            let q: f64 = nodes.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
            assert!((q - shifted.moment(k)).abs() < 1e-11 * shifted.moment(k).abs().max(1.0));
        }
        let q3: f64 = gauss_hermite(128).unwrap().integrate(|z| (0.7 + 1.3 * z).abs().powi(3));
        assert!((q3 - shifted.abs_moment3()).abs() < 1e-4);
        let u = ScalarLaw::uniform(-1.0, 2.0).unwrap();
        assert!((u.moment(1) - 0.5).abs() < 1e-15);
        assert!((u.abs_moment3() - (1.0 + 16.0) / 12.0).abs() < 1e-15);
        let r = rademacher();
        assert_eq!((r.moment(2), r.moment(3), r.abs_moment3()), (1.0, 0.0, 1.0));
    }

    #[test]
    fn law_validation() {
        assert!(ScalarLaw::discrete(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(ScalarLaw::discrete(vec![0.0; 9], vec![1.0 / 9.0; 9]).is_err());
        assert!(ScalarLaw::gaussian(0.0, 0.0).is_err());
        assert!(ScalarLaw::uniform(1.0, 1.0).is_err());
    }

    #[test]
    fn thm1_matched_moments() {
        let pair = VectorPair::iid(rademacher(), gaussian(), 3).unwrap();
        let f = TestFunction::named("cube", 3).unwrap();
        let m3 = 1.0 + 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        let b = bound_thm1(&pair, &f).unwrap();
        assert!((b - 3.0 / 6.0 * 6.0 * m3).abs() < 1e-12);
    }

    #[test]
    fn thm1_identical_and_shifted() {
        let pair = VectorPair::iid(rademacher(), rademacher(), 2).unwrap();
        assert_eq!(pair.a(), vec![0.0, 0.0]);
        assert_eq!(pair.b(), vec![0.0, 0.0]);
        let shifted = ScalarLaw::gaussian(0.4, 1.0).unwrap();
        let pair = VectorPair::iid(gaussian(), shifted, 1).unwrap();
        assert!((pair.a()[0] - 0.4).abs() < 1e-15);
        // unbounded first derivative with a mean mismatch
        let f = TestFunction::named("cube", 1).unwrap();
        assert!(matches!(bound_thm1(&pair, &f), Err(Error::UnboundedDerivative { order: 1 })));
        let lse = TestFunction::named("lse", 1).unwrap();
        assert!(bound_thm1(&pair, &lse).is_ok());
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut fns = vec![
            TestFunction::named("normalized-cube", 3).unwrap(),
            TestFunction::named("sum-quartic", 3).unwrap(),
            TestFunction::LogSumExp(
                LogSumExpFn::new(vec![vec![1.0, -0.5, 0.2], vec![0.3, 0.8, -1.1], vec![-0.7, 0.1, 0.4]], vec![0.0, 0.3, -0.2]).unwrap(),
            ),
        ];
        fns.push(random_case(3).1);
        let mut rng = seeded(5);
        for f in &fns {
            let n = f.arity();
            for _ in 0..5 {
                let x: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
                for i in 0..n {
                    let h = 1e-3;
                    let at = |t: f64| {
                        let mut y = x.clone();
                        y[i] += t;
                        y
                    };
                    let g = |t: f64| f.eval(&at(t));
                    let d1 = (g(-2.0 * h) - 8.0 * g(-h) + 8.0 * g(h) - g(2.0 * h)) / (12.0 * h);
                    let d2 = (-g(2.0 * h) + 16.0 * g(h) - 30.0 * g(0.0) + 16.0 * g(-h) - g(-2.0 * h)) / (12.0 * h * h);
                    let d3 = (f.partial(i, 2, &at(h)) - f.partial(i, 2, &at(-h))) / (2.0 * h);
                    for (r, fd) in [(1, d1), (2, d2), (3, d3)] {
                        let an = f.partial(i, r, &x);
                        assert!((an - fd).abs() <= 1e-5 * an.abs().max(1.0), "r={r}: {an} vs {fd}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivative_bounds_dominate_samples() {
        let (pair, f) = random_case(17);
        let domain = pair.bounding_box().unwrap();
        let bounds = f.derivative_bounds(Some(&domain));
        let mut rng = seeded(1);
        for _ in 0..200 {
            let x: Vec<f64> = domain.iter().map(|(lo, hi)| lo + (hi - lo) * open01(&mut rng)).collect();
            for i in 0..f.arity() {
                for r in 1..=3 {
                    assert!(f.partial(i, r, &x).abs() <= bounds[r as usize - 1].unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn swap_examples() {
        let pair = VectorPair::iid(rademacher(), gaussian(), 2).unwrap();
        for name in ["linear", "sum-squares"] {
            let r = swap_experiment(&pair, &TestFunction::named(name, 2).unwrap(), SwapMode::Exact, 0, 0).unwrap();
            assert!(r.total.abs() < 1e-14 && r.direct.abs() < 1e-14, "{name}");
        }
        let pair1 = VectorPair::iid(rademacher(), gaussian(), 1).unwrap();
        for name in ["cube", "shifted-cube"] {
            let r = swap_experiment(&pair1, &TestFunction::named(name, 1).unwrap(), SwapMode::Exact, 0, 0).unwrap();
            assert!(r.total.abs() < 1e-12, "{name}: {}", r.total);
        }
        let r = swap_experiment(&pair1, &TestFunction::named("sum-quartic", 1).unwrap(), SwapMode::Exact, 0, 0).unwrap();
        assert!((r.direct - 0.25 * (1.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn telescoping_is_exact() {
        for seed in 0..20 {
            let (pair, f) = random_case(seed);
            let r = swap_experiment(&pair, &f, SwapMode::Exact, 0, 0).unwrap();
            assert!((r.total - r.direct).abs() <= 1e-10 * pair.arity() as f64);
        }
    }

    #[test]
    fn quadratic_has_zero_bound_when_moments_match() {
        let pair = VectorPair::iid(rademacher(), ScalarLaw::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap(), 3).unwrap();
        let c = verify_bound(&pair, &TestFunction::named("sum-squares", 3).unwrap(), SwapMode::Exact, 0, 0).unwrap();
        assert!(c.gap.abs() < 1e-14);
        assert!(c.bound_thm2 < 1e-14 && c.bound_thm1.unwrap() < 1e-14);
    }

    #[test]
    fn identical_laws_have_zero_gap() {
        let (pair, f) = random_case(4);
        let same = VectorPair::new(pair.u.clone(), pair.u.clone()).unwrap();
        let c = verify_bound(&same, &f, SwapMode::Exact, 0, 0).unwrap();
        assert!(c.gap.abs() < 1e-12 && c.satisfied);
    }

    #[test]
    fn lse_with_gaussian_coordinates() {
        let pair = VectorPair::iid(rademacher(), gaussian(), 2).unwrap();
        let f = TestFunction::named("lse", 2).unwrap();
        let c = verify_bound(&pair, &f, SwapMode::Exact, 0, 0).unwrap();
        assert!(c.satisfied, "{c:?}");
        assert!(c.bound_thm2 <= c.bound_thm1.unwrap());
    }

    #[test]
    fn monte_carlo_telescopes_and_tracks_exact() {
        let (pair, f) = random_case(8);
        let exact = swap_experiment(&pair, &f, SwapMode::Exact, 0, 0).unwrap();
        let mc = swap_experiment(&pair, &f, SwapMode::MonteCarlo, 20_000, 3).unwrap();
        assert!((mc.total - mc.direct).abs() < 1e-9);
        assert!((mc.bound_thm2 - exact.bound_thm2).abs() < 0.05 * exact.bound_thm2.max(1e-3), "{} vs {}", mc.bound_thm2, exact.bound_thm2);
    }

    #[test]
    fn random_cases_satisfy_both_bounds() {
        for seed in 0..100 {
            let (pair, f) = random_case(1000 + seed);
            let c = verify_bound(&pair, &f, SwapMode::Exact, 0, 0).unwrap();
            assert!(c.satisfied && c.satisfied_thm1 == Some(true), "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn exact_mode_requires_enough_nodes() {
        let pair = VectorPair::iid(rademacher(), gaussian(), 1).unwrap();
        let f = TestFunction::named("cube", 1).unwrap();
        assert!(swap_experiment_with(&pair, &f, SwapMode::Exact, 0, 0, 16).is_err());
    }
}
