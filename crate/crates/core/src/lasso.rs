//! Box-constrained LASSO: coordinate-descent solver, normalized cost, grid
//! discretization, finite-temperature free energy and the paired
//! universality experiment.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_standard, EnsembleSpec, SampledMatrix, Scale};
use crate::error::{Error, Result};
use crate::harness::comparison::{run_paired, ComparisonResult};
use crate::harness::seed::derive_seed;
use crate::numerics::rng::{open01, seeded, standard_normal};
use crate::numerics::{linalg::norm2, LogSumExp, Matrix};
use crate::spectra::gram_spectrum;

/// Largest grid enumeration `|X_δ|ⁿ` accepted.
pub const MAX_GRID_CONFIGS: f64 = 2e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoProblem {
    /// Scaled sensing matrix, `m × n`.
    pub a: Matrix,
    pub x0: Vec<f64>,
    pub z: Vec<f64>,
    /// `A x0 + z`.
    pub y: Vec<f64>,
    pub sigma: f64,
    pub reg_weight: f64,
    pub x_max: f64,
    pub noise_seed: Option<u64>,
}

impl LassoProblem {
    /// Builds `y = A x0 + z` from an explicit noise vector.
    pub fn new(a: Matrix, x0: Vec<f64>, z: Vec<f64>, sigma: f64, reg_weight: f64, x_max: f64) -> Result<Self> {
        if x0.len() != a.cols() || z.len() != a.rows() {
            return Err(Error::dim(format!(
                "x0 of length {} and z of length {} for a {}x{} matrix",
                x0.len(),
                z.len(),
                a.rows(),
                a.cols()
            )));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::param("x_max", format!("{x_max} must be positive")));
        }
        if !(reg_weight >= 0.0) || !reg_weight.is_finite() {
            return Err(Error::param("reg_weight", format!("{reg_weight} must be nonnegative")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::param("sigma", format!("{sigma} must be nonnegative")));
        }
        if let Some(v) = x0.iter().find(|v| v.abs() > x_max) {
            return Err(Error::param("x0", format!("entry {v} exceeds x_max = {x_max}")));
        }
        let mut y = a.matvec(&x0)?;
        y.iter_mut().zip(&z).for_each(|(yi, zi)| *yi += zi);
        Ok(Self { a, x0, z, y, sigma, reg_weight, x_max, noise_seed: None })
    }

    /// Draws `z ~ N(0, σ²)ᵐ` from `noise_seed`.
    pub fn with_noise(a: &SampledMatrix, x0: Vec<f64>, sigma: f64, reg_weight: f64, x_max: f64, noise_seed: u64) -> Result<Self> {
        let mut rng = seeded(noise_seed);
        let z = (0..a.rows).map(|_| sigma * standard_normal(&mut rng)).collect();
        let mut p = Self::new(a.scaled(), x0, z, sigma, reg_weight, x_max)?;
        p.noise_seed = Some(noise_seed);
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `λ‖x‖₁ + ½‖y − Ax‖²`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let ax = self.a.matvec(x)?;
        let fit: f64 = self.y.iter().zip(&ax).map(|(y, v)| (y - v).powi(2)).sum();
        Ok(self.reg_weight * x.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * fit)
    }

    /// Proximal-gradient fixed-point residual `max_j |x_j − clip(soft(x_j − g_j, λ))|`
    /// with `g = Aᵀ(Ax − y)`; zero exactly at the box-constrained optimum.
    pub fn kkt_residual(&self, x: &[f64]) -> Result<f64> {
        let mut r = self.a.matvec(x)?;
        r.iter_mut().zip(&self.y).for_each(|(v, y)| *v -= y);
        let g = self.a.transpose().matvec(&r)?;
        Ok(x.iter()
            .zip(&g)
            .map(|(xj, gj)| (xj - clip(soft(xj - gj, self.reg_weight), self.x_max)).abs())
            .fold(0.0, f64::max))
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn clip(v: f64, b: f64) -> f64 {
    v.clamp(-b, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_hat: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Objective after each sweep.
    pub history: Vec<f64>,
}

/// Cyclic coordinate descent. Each update is the exact minimizer in one
/// coordinate: soft-threshold `a_jᵀr + ‖a_j‖²x_j` at `λ`, divide by
/// `‖a_j‖²`, clip to the box. A zero column is set to 0.
pub fn solve_box_lasso(p: &LassoProblem, tol: f64, max_iter: usize) -> Result<SolveResult> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let (m, n) = (p.a.rows(), p.a.cols());
    let cols: Vec<Vec<f64>> = (0..n).map(|j| p.a.column(j)).collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut x = vec![0.0; n];
    let mut r = p.y.clone();
    let mut history = Vec::new();
    let mut prev = p.objective(&x)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..n {
            let new = if sq[j] == 0.0 {
                0.0
            } else {
                let c: f64 = cols[j].iter().zip(&r).map(|(a, ri)| a * ri).sum::<f64>() + sq[j] * x[j];
                clip(soft(c, p.reg_weight) / sq[j], p.x_max)
            };
            let delta = new - x[j];
            if delta != 0.0 {
                for i in 0..m {
                    r[i] -= delta * cols[j][i];
                }
                x[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let obj = p.objective(&x)?;
        if obj > prev + 1e-12 * prev.abs().max(1.0) {
            return Err(Error::NonFinite {
                context: format!("objective increased from {prev} to {obj} in sweep {iterations}"),
            });
        }
        history.push(obj);
        prev = obj;
        if max_change < tol {
            converged = true;
            break;
        }
    }
    let kkt_residual = p.kkt_residual(&x)?;
    Ok(SolveResult { cost: prev, x_hat: x, iterations, converged, kkt_residual, history })
}

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// `L = (1/n) min_x H(x)`; the flag reports solver convergence.
pub fn normalized_cost(p: &LassoProblem, tol: f64) -> Result<(f64, bool)> {
    let s = solve_box_lasso(p, tol, DEFAULT_MAX_ITER)?;
    Ok((s.cost / p.n() as f64, s.converged))
}

/// Grid `{kδ : |kδ| ≤ x_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta: f64,
    pub x_max: f64,
    pub points: Vec<f64>,
}

impl GridSpec {
    pub fn new(delta: f64, x_max: f64) -> Result<Self> {
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::param("x_max", format!("{x_max} must be positive")));
        }
        if !(delta > 0.0) || delta > 2.0 * x_max {
            return Err(Error::param("delta", format!("{delta} outside (0, 2 x_max]")));
        }
        let k = (x_max / delta * (1.0 + 1e-12)).floor() as i64;
        let points = (-k..=k).map(|i| i as f64 * delta).collect();
        Ok(Self { delta, x_max, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    Exact,
    /// Cyclic exact 1-D minimization over the grid; a local minimum, so an
    /// upper bound on the exact value.
    Descent,
}

fn check_grid(p: &LassoProblem, grid: &GridSpec) -> Result<()> {
    let size = (grid.len() as f64).powi(p.n() as i32);
    if size > MAX_GRID_CONFIGS {
        return Err(Error::EnumerationTooLarge { size, limit: MAX_GRID_CONFIGS });
    }
    if grid.x_max > p.x_max * (1.0 + 1e-12) {
        return Err(Error::param("grid", "grid extends past the problem's box"));
    }
    Ok(())
}

/// Visits `X_δⁿ` in odometer order with an incrementally updated residual;
/// the callback receives `H(x)`.
fn enumerate_grid<F: FnMut(f64)>(p: &LassoProblem, grid: &GridSpec, mut visit: F) {
    let (m, n) = (p.a.rows(), p.a.cols());
    let k = grid.len();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| p.a.column(j)).collect();
    let mut idx = vec![0usize; n];
    let lo = grid.points[0];
    let mut l1 = n as f64 * lo.abs();
    let mut r = p.y.clone();
    for col in &cols {
        for i in 0..m {
            r[i] -= lo * col[i];
        }
    }
    loop {
        let fit: f64 = r.iter().map(|v| v * v).sum();
        visit(p.reg_weight * l1 + 0.5 * fit);
        let mut j = 0;
        loop {
            if j == n {
                return;
            }
            let old = grid.points[idx[j]];
            if idx[j] + 1 < k {
                idx[j] += 1;
                let new = grid.points[idx[j]];
                l1 += new.abs() - old.abs();
                for i in 0..m {
                    r[i] -= (new - old) * cols[j][i];
                }
                break;
            }
            idx[j] = 0;
            l1 += lo.abs() - old.abs();
            for i in 0..m {
                r[i] -= (lo - old) * cols[j][i];
            }
            j += 1;
        }
    }
}

/// `L_δ = (1/n) min_{x ∈ X_δⁿ} H(x)`.
pub fn grid_cost(p: &LassoProblem, grid: &GridSpec, mode: GridMode) -> Result<f64> {
    match mode {
        GridMode::Exact => {
            check_grid(p, grid)?;
            let mut best = f64::INFINITY;
            enumerate_grid(p, grid, |h| best = best.min(h));
            Ok(best / p.n() as f64)
        }
        GridMode::Descent => grid_descent(p, grid),
    }
}

fn grid_descent(p: &LassoProblem, grid: &GridSpec) -> Result<f64> {
    let n = p.n();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| p.a.column(j)).collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut x = vec![0.0; n];
    let mut r = p.y.clone();
    for _ in 0..DEFAULT_MAX_ITER {
        let mut moved = false;
        for j in 0..n {
            // H as a function of x_j alone: λ|v| + ½‖r_j‖² − v a_jᵀr_j + ½‖a_j‖²v²
            let c: f64 = cols[j].iter().zip(&r).map(|(a, ri)| a * ri).sum::<f64>() + sq[j] * x[j];
            let cost = |v: f64| p.reg_weight * v.abs() - v * c + 0.5 * sq[j] * v * v;
            let mut best = x[j];
            let mut best_cost = cost(x[j]);
            for &v in &grid.points {
                let cv = cost(v);
                if cv < best_cost - 1e-15 * best_cost.abs().max(1.0) {
                    best = v;
                    best_cost = cv;
                }
            }
            if best != x[j] {
                let d = best - x[j];
                r.iter_mut().zip(&cols[j]).for_each(|(ri, a)| *ri -= d * a);
                x[j] = best;
                moved = true;
            }
        }
        if !moved {
            return Ok(p.objective(&x)? / n as f64);
        }
    }
    Err(Error::NoConvergence { what: "grid descent", iterations: DEFAULT_MAX_ITER })
}

/// `f(δ, β) = −(1/βn) log Σ_{x ∈ X_δⁿ} e^{−βH(x)}`.
pub fn finite_temp_free_energy(p: &LassoProblem, grid: &GridSpec, beta: f64) -> Result<f64> {
    Ok(finite_temp_with_entropy(p, grid, beta)?.0)
}

/// `f(δ, β)` together with the Shannon entropy of the Gibbs measure.
pub fn finite_temp_with_entropy(p: &LassoProblem, grid: &GridSpec, beta: f64) -> Result<(f64, f64)> {
    check_grid(p, grid)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("{beta} must be positive")));
    }
    let mut acc = LogSumExp::new();
    let mut energies = Vec::new();
    enumerate_grid(p, grid, |h| {
        acc.push(-beta * h);
        energies.push(h);
    });
    let log_z = acc.value();
    // H(p) = log Z + β⟨H⟩
    let mean_h: f64 = energies.iter().map(|h| (-beta * h - log_z).exp() * h).sum();
    let entropy = (log_z + beta * mean_h).max(0.0);
    Ok((-log_z / (beta * p.n() as f64), entropy))
}

/// Largest singular value of a matrix, from the eigenvalues of `AᵀA`.
pub fn sigma_max(a: &Matrix) -> Result<f64> {
    let s = gram_spectrum(a, 1.0)?;
    Ok(s.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// The three terms of the grid-approximation bound
/// `λδ + σ_max δ ‖z‖/√n + 2 σ_max² x_max δ` (with `‖x‖ ≤ √n x_max`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGapBound {
    pub reg_term: f64,
    pub noise_term: f64,
    pub spectral_term: f64,
}

impl GridGapBound {
    pub fn total(&self) -> f64 {
        self.reg_term + self.noise_term + self.spectral_term
    }
}

pub fn grid_gap_bound(p: &LassoProblem, delta: f64) -> Result<GridGapBound> {
    let s = sigma_max(&p.a)?;
    let n = p.n() as f64;
    Ok(GridGapBound {
        reg_term: p.reg_weight * delta,
        noise_term: s * delta * norm2(&p.z) / n.sqrt(),
        spectral_term: 2.0 * s * s * p.x_max * delta,
    })
}

/// Sparse signal: `round(ρn)` coordinates at `±x_max` with random signs.
pub fn sparse_signal(n: usize, rho: f64, x_max: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::param("rho", format!("{rho} outside [0, 1]")));
    }
    let mut rng = seeded(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let k = (rho * n as f64).round() as usize;
    let mut x0 = vec![0.0; n];
    for &i in &idx[..k] {
        x0[i] = if open01(&mut rng) < 0.5 { -x_max } else { x_max };
    }
    Ok(x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoExperiment {
    pub n: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub reg_weight: f64,
    pub rho: f64,
    pub x_max: f64,
    pub trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl LassoExperiment {
    pub fn m(&self) -> usize {
        (self.alpha * self.n as f64).round() as usize
    }
}

/// Builds the problem for one ensemble in one trial; `x0`, `z` and the
/// matrix seed depend only on the trial seed.
pub fn trial_problem(spec: &EnsembleSpec, exp: &LassoExperiment, trial_seed: u64) -> Result<LassoProblem> {
    let (m, n) = (exp.m(), exp.n);
    if m == 0 || n == 0 {
        return Err(Error::dim("m and n must be positive"));
    }
    let x0 = sparse_signal(n, exp.rho, exp.x_max, derive_seed(trial_seed, &["x0"], 0))?;
    let a = sample_standard(spec, m, n, derive_seed(trial_seed, &["matrix"], 0))?.with_scale(Scale::SqrtCols)?;
    LassoProblem::with_noise(&a, x0, exp.sigma, exp.reg_weight, exp.x_max, derive_seed(trial_seed, &["noise"], 0))
}

/// Paired normalized costs of `n^{-1/2}A` and `n^{-1/2}B` with shared
/// `x0`, noise and matrix seed.
pub fn universality_experiment(spec_a: &EnsembleSpec, spec_b: &EnsembleSpec, exp: &LassoExperiment) -> Result<ComparisonResult> {
    let res = run_paired("lasso.universality", exp.seed, exp.trials, exp.workers, |_, seed| {
        let cost = |spec: &EnsembleSpec| -> Result<f64> {
            let p = trial_problem(spec, exp, seed)?;
            let s = solve_box_lasso(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            if !s.converged {
                return Err(Error::NoConvergence { what: "coordinate descent", iterations: s.iterations });
            }
            Ok(s.cost / exp.n as f64)
        };
        Ok((cost(spec_a)?, cost(spec_b)?))
    })?;
    Ok(res
        .with_param("ens_a", spec_a)
        .with_param("ens_b", spec_b)
        .with_param("n", exp.n)
        .with_param("m", exp.m())
        .with_param("sigma", exp.sigma)
        .with_param("lambda", exp.reg_weight)
        .with_param("rho", exp.rho))
}


#[cfg(test)]
mod proptests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solution_satisfies_kkt(
            (m, n, v) in (2usize..7, 2usize..7).prop_flat_map(|(m, n)| (Just(m), Just(n), prop::collection::vec(-3.0f64..3.0, m * n))),
            lambda in 0.05f64..2.0,
        ) {
            let a = Matrix::from_vec(m, n, v).unwrap();
            let x0: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
            let p = LassoProblem::new(a, x0, vec![0.0; m], 1.0, lambda, 2.0).unwrap();
            let s = solve_box_lasso(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            prop_assert!(s.converged);
            prop_assert!(s.kkt_residual < 1e-6, "kkt {}", s.kkt_residual);
            prop_assert!(s.x_hat.iter().all(|x| x.abs() <= 2.0 + 1e-12));
            prop_assert!(s.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }
}
