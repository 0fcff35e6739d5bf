//! Replica-symmetric capacity functional `C_RS(q)`, its minimization over
//! `q ∈ [0, 1]`, and the uniqueness threshold `α_s`.
//!
//! The functional is evaluated verbatim. Its large-noise limit is `−log 2`
//! while the capacity tends to 0, so [`Calibration::PlusLog2`] adds `log 2`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_hermite, Rule};

pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_GRID: usize = 2001;
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;
/// Smallest barrier height for two grid minima to count as distinct.
pub const MIN_BARRIER: f64 = 1e-10;

/// Gauss–Hermite rule for expectations over `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    pub node_count: usize,
    rule: Rule,
}

impl QuadratureSpec {
    pub fn new(node_count: usize) -> Result<Self> {
        Ok(Self { node_count, rule: gauss_hermite(node_count)? })
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        self.rule.integrate(f)
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(DEFAULT_NODES).expect("default node count is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    #[default]
    Printed,
    PlusLog2,
}

impl Calibration {
    pub fn offset(self) -> f64 {
        match self {
            Calibration::Printed => 0.0,
            Calibration::PlusLog2 => LN_2,
        }
    }
}

impl std::str::FromStr for Calibration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "printed" | "none" => Ok(Calibration::Printed),
            "plus-log2" | "plus_log2" | "log2" => Ok(Calibration::PlusLog2),
            other => Err(Error::param("calibration", format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaPoint {
    pub q: f64,
    pub alpha: f64,
    pub sigma2: f64,
    /// `1/(σ² + α(1 − q))`.
    pub lambda: f64,
    /// Printed `C_RS(q)`.
    pub value: f64,
}

impl ReplicaPoint {
    pub fn calibrated(&self, c: Calibration) -> f64 {
        self.value + c.offset()
    }
}

/// `log(2 cosh x)` without overflow.
fn log_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

fn check_model(alpha: f64, sigma2: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", format!("{alpha} must be positive")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::param("sigma2", format!("{sigma2} must be positive")));
    }
    Ok(())
}

/// `(λ/2)(1 + q) − (1/2α) log(λσ²) − E log(2 cosh(√λ Z + λ))`.
pub fn crs(q: f64, alpha: f64, sigma2: f64, quad: &QuadratureSpec) -> Result<ReplicaPoint> {
    check_model(alpha, sigma2)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} outside [0, 1]")));
    }
    let lambda = 1.0 / (sigma2 + alpha * (1.0 - q));
    let s = lambda.sqrt();
    let e = quad.expect(|z| log_2cosh(s * z + lambda));
    let value = 0.5 * lambda * (1.0 + q) - (lambda * sigma2).ln() / (2.0 * alpha) - e;
    if !value.is_finite() {
        return Err(Error::non_finite(format!("C_RS at q = {q}, alpha = {alpha}, sigma2 = {sigma2}")));
    }
    Ok(ReplicaPoint { q, alpha, sigma2, lambda, value })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub q: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimization {
    pub alpha: f64,
    pub sigma2: f64,
    pub q_star: f64,
    /// Printed value at `q_star`.
    pub value: f64,
    pub all_local_minima: Vec<LocalMinimum>,
}

impl Minimization {
    pub fn is_unique(&self) -> bool {
        self.all_local_minima.len() == 1
    }

    pub fn calibrated(&self, c: Calibration) -> f64 {
        self.value + c.offset()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_section<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let q = 0.5 * (a + b);
    Ok((q, f(q)?))
}

/// Global minimum over `q ∈ [0, 1]`: scan `grid_size` points, then
/// golden-section refinement inside the bracket of every grid local minimum.
pub fn minimize_crs(
    alpha: f64,
    sigma2: f64,
    grid_size: usize,
    refine_tol: f64,
    quad: &QuadratureSpec,
) -> Result<Minimization> {
    check_model(alpha, sigma2)?;
    if grid_size < 3 {
        return Err(Error::param("grid_size", "at least 3 points are required"));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::param("refine_tol", "must be positive"));
    }
    let step = 1.0 / (grid_size - 1) as f64;
    let qs: Vec<f64> = (0..grid_size).map(|i| i as f64 * step).collect();
    let vals: Vec<f64> = qs
        .iter()
        .map(|&q| crs(q, alpha, sigma2, quad).map(|p| p.value))
        .collect::<Result<_>>()?;
    let last = grid_size - 1;
    let f = |q: f64| crs(q.clamp(0.0, 1.0), alpha, sigma2, quad).map(|p| p.value);
    let mut candidates: Vec<usize> = (0..grid_size)
        .filter(|&i| (i == 0 || vals[i] < vals[i - 1]) && (i == last || vals[i] <= vals[i + 1]))
        .collect();
    // Neighbouring grid minima separated by a barrier below MIN_BARRIER are
    // one minimum seen through rounding noise on a flat stretch.
    let mut k = 1;
    while k < candidates.len() {
        let (i, j) = (candidates[k - 1], candidates[k]);
        let ridge = vals[i..=j].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if ridge - vals[i].max(vals[j]) < MIN_BARRIER {
            let drop = if vals[i] <= vals[j] { k } else { k - 1 };
            candidates.remove(drop);
        } else {
            k += 1;
        }
    }
    let mut minima: Vec<LocalMinimum> = Vec::new();
    for i in candidates {
        let (q, value) = if i == 0 && vals[0] < vals[1] && boundary_min(&f, 0.0, refine_tol)? {
            (0.0, vals[0])
        } else if i == last && vals[last] < vals[last - 1] && boundary_min(&f, 1.0, refine_tol)? {
            (1.0, vals[last])
        } else {
            let lo = qs[i.saturating_sub(1)];
            let hi = qs[(i + 1).min(last)];
            golden_section(f, lo, hi, refine_tol)?
        };
        minima.push(LocalMinimum { q, value });
    }
    let best = minima
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .cloned()
        .ok_or_else(|| Error::non_finite("no local minimum found on the q grid"))?;
    Ok(Minimization { alpha, sigma2, q_star: best.q, value: best.value, all_local_minima: minima })
}

/// Whether an endpoint grid minimum is a genuine boundary minimum: the
/// one-sided slope at the endpoint points into the interior.
fn boundary_min<F: Fn(f64) -> Result<f64>>(f: &F, q: f64, tol: f64) -> Result<bool> {
    let h = tol.max(1e-7);
    Ok(if q == 0.0 { f(h)? >= f(0.0)? } else { f(1.0 - h)? >= f(1.0)? })
}

/// Logarithmic grid of `count` points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::param("grid", format!("need 0 < lo < hi and count ≥ 2, got ({lo}, {hi}, {count})")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

/// Points of the default noise grid. Coexisting minima first appear in a
/// narrow window near `σ² ≈ 0.13`; a 25-point grid steps over it and
/// overestimates the threshold (about 1.73).
pub const DEFAULT_SIGMA2_POINTS: usize = 801;

/// Default noise grid for the threshold search: log-spaced in `[10⁻², 10²]`.
pub fn default_sigma2_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, DEFAULT_SIGMA2_POINTS).expect("constant grid is valid")
}

/// Whether the minimizer is unique for every `σ²` in the grid.
pub fn unique_for_all(alpha: f64, sigma2_grid: &[f64], grid_size: usize, quad: &QuadratureSpec) -> Result<bool> {
    for &s2 in sigma2_grid {
        if !minimize_crs(alpha, s2, grid_size, DEFAULT_REFINE_TOL, quad)?.is_unique() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `α` in `[alpha_lo, alpha_hi]` for which [`unique_for_all`] holds,
/// located by bisection to `tol`.
pub fn find_alpha_s(sigma2_grid: &[f64], alpha_lo: f64, alpha_hi: f64, tol: f64) -> Result<f64> {
    find_alpha_s_with(sigma2_grid, alpha_lo, alpha_hi, tol, DEFAULT_GRID, &QuadratureSpec::default())
}

pub fn find_alpha_s_with(
    sigma2_grid: &[f64],
    alpha_lo: f64,
    alpha_hi: f64,
    tol: f64,
    grid_size: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if sigma2_grid.is_empty() {
        return Err(Error::param("sigma2_grid", "must be nonempty"));
    }
    if !(alpha_lo > 0.0 && alpha_hi > alpha_lo) || !(tol > 0.0) {
        return Err(Error::param("bracket", format!("need 0 < lo < hi and tol > 0, got [{alpha_lo}, {alpha_hi}]")));
    }
    let p_lo = unique_for_all(alpha_lo, sigma2_grid, grid_size, quad)?;
    let p_hi = unique_for_all(alpha_hi, sigma2_grid, grid_size, quad)?;
    if p_lo == p_hi || !p_lo {
        return Err(Error::ConstantPredicate { lo: alpha_lo, hi: alpha_hi, value: p_lo });
    }
    let (mut lo, mut hi) = (alpha_lo, alpha_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if unique_for_all(mid, sigma2_grid, grid_size, quad)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
