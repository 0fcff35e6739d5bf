//! Binary-input CDMA: the quadratic Hamiltonian over `{0,2}ⁿ`, its free
//! energy by exhaustive enumeration, capacity estimates and paired
//! universality / sparse–dense experiments.
//!
//! All matrices passed to the low-level routines are already scaled.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_standard, sparsify, EnsembleSpec, SampledMatrix, Scale};
use crate::error::{Error, Result};
use crate::harness::comparison::{run_paired, run_paired_multi, ComparisonResult};
use crate::harness::seed::derive_seed;
use crate::numerics::rng::{seeded, standard_normal};
use crate::numerics::{LogSumExp, Matrix, WeightedLogSumExp};

/// Largest number of users handled by enumeration.
pub const MAX_USERS: usize = 20;
/// Largest number of users for the third-derivative check.
pub const MAX_USERS_DERIVATIVE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdmaChannel {
    pub sigma: f64,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
}

impl CdmaChannel {
    pub fn new(n: usize, alpha: f64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::dim("at least one user is required"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("{alpha} must be positive")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("{sigma} must be positive")));
        }
        let m = (alpha * n as f64).round() as usize;
        if m == 0 {
            return Err(Error::dim("round(alpha n) must be at least 1"));
        }
        Ok(Self { sigma, alpha, n, m })
    }

    /// `m/n` as realized after rounding.
    pub fn effective_alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// Nats per user.
    pub mean: f64,
    pub std_error: f64,
    pub matrix_trials: usize,
    pub noise_trials: usize,
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::EnumerationTooLarge {
            size: 2f64.powi(n as i32),
            limit: 2f64.powi(cap as i32),
        })
    } else {
        Ok(())
    }
}

fn check_dims(a: &Matrix, z: &[f64]) -> Result<()> {
    if a.rows() != z.len() {
        return Err(Error::dim(format!(
            "noise of length {} for {} chips",
            z.len(),
            a.rows()
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param("sigma", format!("{sigma} must be positive")))
    }
}

/// `(1/2σ²) Σ_i (z_i + Σ_j A_ij x_j)²`.
pub fn hamiltonian(x: &[f64], z: &[f64], a: &Matrix, sigma: f64) -> Result<f64> {
    check_dims(a, z)?;
    if x.len() != a.cols() {
        return Err(Error::dim(format!("x of length {} for {} users", x.len(), a.cols())));
    }
    check_sigma(sigma)?;
    let ax = a.matvec(x)?;
    Ok(ax
        .iter()
        .zip(z)
        .map(|(v, zi)| (zi + v).powi(2))
        .sum::<f64>()
        / (2.0 * sigma * sigma))
}

/// Column-major copy of `2A`.
fn doubled_columns(a: &Matrix) -> Vec<f64> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols = vec![0.0; m * n];
    for j in 0..n {
        for i in 0..m {
            cols[j * m + i] = 2.0 * a[(i, j)];
        }
    }
    cols
}

/// Visits every `x ∈ {0,2}ⁿ` in Gray-code order, maintaining the residual
/// `z + Ax`. The callback sees `(x, residual)`.
fn enumerate_residuals<F: FnMut(&[f64], &[f64])>(a: &Matrix, z: &[f64], mut visit: F) {
    let (m, n) = (a.rows(), a.cols());
    let cols = doubled_columns(a);
    let mut x = vec![0.0; n];
    let mut r = z.to_vec();
    visit(&x, &r);
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let col = &cols[j * m..(j + 1) * m];
        if x[j] == 0.0 {
            x[j] = 2.0;
            r.iter_mut().zip(col).for_each(|(ri, c)| *ri += c);
        } else {
            x[j] = 0.0;
            r.iter_mut().zip(col).for_each(|(ri, c)| *ri -= c);
        }
        visit(&x, &r);
    }
}

/// `(1/n) log Σ_{x∈{0,2}ⁿ} exp(−H(x))`.
pub fn free_energy(a: &Matrix, z: &[f64], sigma: f64) -> Result<f64> {
    check_dims(a, z)?;
    check_cap(a.cols(), MAX_USERS)?;
    check_sigma(sigma)?;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut acc = LogSumExp::new();
    enumerate_residuals(a, z, |_, r| {
        let h: f64 = r.iter().map(|v| v * v).sum::<f64>() * inv;
        acc.push(-h);
    });
    Ok(acc.value() / a.cols() as f64)
}

/// Free energies for several noise vectors sharing one matrix.
///
/// Uses `‖z + Ax‖² = ‖z‖² + 2 zᵀ(Ax) + xᵀGx` with `G = AᵀA`; per Gray step
/// the inner products `zₜᵀ(Ax)` move by `±2 zₜᵀa_j` and `Gx` by `±2 G e_j`,
/// so each configuration costs `O(T + n)` rather than `O(T m)`.
pub fn free_energy_batch(a: &Matrix, noises: &[Vec<f64>], sigma: f64) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    check_cap(n, MAX_USERS)?;
    check_sigma(sigma)?;
    for z in noises {
        check_dims(a, z)?;
    }
    let t = noises.len();
    let g = a.gram(1.0);
    // p[j*t + s] = z_s · a_j
    let mut p = vec![0.0; n * t];
    for j in 0..n {
        for (s, z) in noises.iter().enumerate() {
            p[j * t + s] = (0..m).map(|i| z[i] * a[(i, j)]).sum();
        }
    }
    let zz: Vec<f64> = noises.iter().map(|z| z.iter().map(|v| v * v).sum()).collect();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut dots = vec![0.0; t];
    let mut gx = vec![0.0; n];
    let mut quad = 0.0;
    let mut x = vec![false; n];
    let mut acc: Vec<LogSumExp> = vec![LogSumExp::new(); t];
    for (s, acc_s) in acc.iter_mut().enumerate() {
        acc_s.push(-zz[s] * inv);
    }
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let sign = if x[j] { -2.0 } else { 2.0 };
        x[j] = !x[j];
        // ‖A(x + δ)‖² = ‖Ax‖² + 2δ (Gx)_j + δ² G_jj
        quad += 2.0 * sign * gx[j] + sign * sign * g[(j, j)];
        for (q, gj) in gx.iter_mut().zip(g.row(j)) {
            *q += sign * gj;
        }
        let pj = &p[j * t..(j + 1) * t];
        for s in 0..t {
            dots[s] += sign * pj[s];
            acc[s].push(-(zz[s] + 2.0 * dots[s] + quad) * inv);
        }
    }
    Ok(acc.iter().map(|a| a.value() / n as f64).collect())
}

/// Gibbs average `Σ g(x) e^{−H} / Σ e^{−H}` by enumeration.
pub fn gibbs_average<G: Fn(&[f64]) -> f64>(g: G, z: &[f64], a: &Matrix, sigma: f64) -> Result<f64> {
    check_dims(a, z)?;
    check_cap(a.cols(), MAX_USERS)?;
    check_sigma(sigma)?;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut acc = WeightedLogSumExp::new(1);
    enumerate_residuals(a, z, |x, r| {
        let h: f64 = r.iter().map(|v| v * v).sum::<f64>() * inv;
        acc.push(-h, &[g(x)]);
    });
    Ok(acc.averages()[0])
}

/// Draws `trials` noise vectors of length `m` with i.i.d. `N(0, σ²)` entries.
pub fn draw_noise(m: usize, sigma: f64, trials: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..trials)
        .map(|_| (0..m).map(|_| sigma * standard_normal(&mut rng)).collect())
        .collect()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `log 2 − α/2 − mean_Z f(A, Z)` with the transmitted word fixed to all
/// ones, from explicit noise draws. `α` is taken from the matrix shape.
pub fn capacity_from_noise(a: &Matrix, noises: &[Vec<f64>], sigma: f64) -> Result<(f64, f64)> {
    if noises.is_empty() {
        return Err(Error::param("noise_trials", "must be positive"));
    }
    let fs = free_energy_batch(a, noises, sigma)?;
    let (mf, se) = mean_and_se(&fs);
    let alpha = a.rows() as f64 / a.cols() as f64;
    Ok((LN_2 - 0.5 * alpha - mf, se))
}

/// Capacity per user of one (scaled) signature matrix.
pub fn capacity_exact(
    a: &SampledMatrix,
    channel: &CdmaChannel,
    noise_trials: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if a.rows != channel.m || a.cols != channel.n {
        return Err(Error::dim(format!(
            "{}x{} matrix for a channel with m = {}, n = {}",
            a.rows, a.cols, channel.m, channel.n
        )));
    }
    let noises = draw_noise(channel.m, channel.sigma, noise_trials, seed);
    let (mean, std_error) = capacity_from_noise(&a.scaled(), &noises, channel.sigma)?;
    Ok(CapacityEstimate {
        mean,
        std_error,
        matrix_trials: 1,
        noise_trials,
        n: channel.n,
        m: channel.m,
        sigma: channel.sigma,
    })
}

/// Capacity averaged over every transmitted word `x_in ∈ {±1}ⁿ`, i.e. with
/// the columns of `A` sign-flipped according to `x_in`. Unlike the fixed-word
/// estimate this is invariant under column sign flips for each fixed `A`.
pub fn capacity_all_inputs(a: &Matrix, noises: &[Vec<f64>], sigma: f64) -> Result<f64> {
    let n = a.cols();
    check_cap(2 * n, MAX_USERS)?;
    let mut total = 0.0;
    for word in 0u64..(1u64 << n) {
        let mut b = a.clone();
        for j in 0..n {
            if word >> j & 1 == 1 {
                for i in 0..a.rows() {
                    b[(i, j)] = -b[(i, j)];
                }
            }
        }
        total += capacity_from_noise(&b, noises, sigma)?.0;
    }
    Ok(total / (1u64 << n) as f64)
}

/// Analytic third derivative of the free energy in `A_rc` next to a
/// finite-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThirdDerivativeCheck {
    /// `(1/n)[−⟨H′³⟩ + 3⟨H′⟩⟨H′²⟩ − 2⟨H′⟩³ + 3(⟨H′H″⟩ − ⟨H′⟩⟨H″⟩)]`.
    pub analytic: f64,
    /// Five-point central third difference of `free_energy`, Richardson
    /// extrapolated from steps `h` and `h/2`.
    pub finite_diff: f64,
    pub rel_err: f64,
    /// The three-cumulant expression alone, `(1/n)(−⟨H′³⟩ + 3⟨H′⟩⟨H′²⟩ − 2⟨H′⟩³)`.
    /// Writing `H′ = D/(2σ²)` with `D` the derivative of `‖z + Ax‖²` gives the
    /// same value with an explicit `(2σ²)⁻³` prefactor. It drops the `H″`
    /// contribution and so differs from the true derivative.
    pub cumulant_only: f64,
}

/// Gibbs moments of `H′ = x_c r_r / σ²` and `H″ = x_c² / σ²`.
fn derivative_moments(a: &Matrix, z: &[f64], sigma: f64, r: usize, c: usize) -> [f64; 5] {
    let s2 = sigma * sigma;
    let inv = 1.0 / (2.0 * s2);
    let mut acc = WeightedLogSumExp::new(5);
    enumerate_residuals(a, z, |x, res| {
        let h: f64 = res.iter().map(|v| v * v).sum::<f64>() * inv;
        let d1 = x[c] * res[r] / s2;
        let d2 = x[c] * x[c] / s2;
        acc.push(-h, &[d1, d1 * d1, d1 * d1 * d1, d2, d1 * d2]);
    });
    let v = acc.averages();
    [v[0], v[1], v[2], v[3], v[4]]
}

pub fn third_derivative_check(
    a: &Matrix,
    z: &[f64],
    sigma: f64,
    r: usize,
    c: usize,
    h: f64,
) -> Result<ThirdDerivativeCheck> {
    check_dims(a, z)?;
    check_cap(a.cols(), MAX_USERS_DERIVATIVE)?;
    check_sigma(sigma)?;
    if r >= a.rows() || c >= a.cols() {
        return Err(Error::dim(format!("entry ({r},{c}) outside the matrix")));
    }
    if !(h > 0.0) {
        return Err(Error::param("h", "step must be positive"));
    }
    let n = a.cols() as f64;
    let [m1, m2, m3, k, m1k] = derivative_moments(a, z, sigma, r, c);
    let cumulant = -m3 + 3.0 * m1 * m2 - 2.0 * m1.powi(3);
    let analytic = (cumulant + 3.0 * (m1k - m1 * k)) / n;
    let f = |t: f64| -> Result<f64> {
        let mut b = a.clone();
        b[(r, c)] += t;
        free_energy(&b, z, sigma)
    };
    let third = |h: f64| -> Result<f64> { Ok((f(2.0 * h)? - 2.0 * f(h)? + 2.0 * f(-h)? - f(-2.0 * h)?) / (2.0 * h.powi(3))) };
    let finite_diff = (4.0 * third(0.5 * h)? - third(h)?) / 3.0;
    Ok(ThirdDerivativeCheck {
        analytic,
        finite_diff,
        rel_err: (analytic - finite_diff).abs() / analytic.abs().max(1e-12),
        cumulant_only: cumulant / n,
    })
}

/// Which divisor the dense side of a sparse–dense comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseScale {
    SqrtRows,
    SqrtCols,
}

impl DenseScale {
    fn scale(self) -> Scale {
        match self {
            DenseScale::SqrtRows => Scale::SqrtRows,
            DenseScale::SqrtCols => Scale::SqrtCols,
        }
    }
}

impl std::str::FromStr for DenseScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "m" | "sqrt_m" | "rows" => Ok(DenseScale::SqrtRows),
            "n" | "sqrt_n" | "cols" => Ok(DenseScale::SqrtCols),
            other => Err(Error::param("dense_scale", format!("unknown convention `{other}`"))),
        }
    }
}

/// Parameters of a paired CDMA experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdmaExperiment {
    pub channel: CdmaChannel,
    pub matrix_trials: usize,
    pub noise_trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

/// Paired capacities of `m^{-1/2}A` (ensemble `spec_a`) and `m^{-1/2}B`
/// (ensemble `spec_b`); both matrices and the noise draws share seeds.
pub fn universality_experiment(
    spec_a: &EnsembleSpec,
    spec_b: &EnsembleSpec,
    exp: &CdmaExperiment,
) -> Result<ComparisonResult> {
    let ch = exp.channel;
    check_cap(ch.n, MAX_USERS)?;
    let res = run_paired("cdma.universality", exp.seed, exp.matrix_trials, exp.workers, |_, seed| {
        let mseed = derive_seed(seed, &["matrix"], 0);
        let noises = draw_noise(ch.m, ch.sigma, exp.noise_trials, derive_seed(seed, &["noise"], 0));
        let a = sample_standard(spec_a, ch.m, ch.n, mseed)?.with_scale(Scale::SqrtRows)?;
        let b = sample_standard(spec_b, ch.m, ch.n, mseed)?.with_scale(Scale::SqrtRows)?;
        Ok((
            capacity_from_noise(&a.scaled(), &noises, ch.sigma)?.0,
            capacity_from_noise(&b.scaled(), &noises, ch.sigma)?.0,
        ))
    })?;
    Ok(res
        .with_param("ens_a", spec_a)
        .with_param("ens_b", spec_b)
        .with_param("n", ch.n)
        .with_param("m", ch.m)
        .with_param("sigma", ch.sigma)
        .with_param("noise_trials", exp.noise_trials))
}

/// For each `γ`: paired capacities of `γ^{-1/2}A^γ` and the dense baseline
/// `B` under `dense_scale`. `A^γ` thins `B` with a mask seed shared across
/// `γ`; noise draws are shared.
pub fn sparse_dense_experiment(
    spec: &EnsembleSpec,
    gammas: &[f64],
    exp: &CdmaExperiment,
    dense_scale: DenseScale,
) -> Result<Vec<ComparisonResult>> {
    let ch = exp.channel;
    check_cap(ch.n, MAX_USERS)?;
    if gammas.is_empty() {
        return Err(Error::param("gammas", "at least one value is required"));
    }
    if let Some(&g) = gammas.iter().find(|&&g| !(g > 0.0) || g > ch.n as f64) {
        return Err(Error::param(
            "gammas",
            format!("{g} is outside (0, n = {}]; the keep probability γ/n must not exceed 1", ch.n),
        ));
    }
    let outputs: Vec<String> = gammas.iter().map(|g| format!("cdma.sparse-dense[gamma={g}]")).collect();
    let results = run_paired_multi("cdma.sparse-dense", &outputs, exp.seed, exp.matrix_trials, exp.workers, |_, seed| {
        let base = sample_standard(spec, ch.m, ch.n, derive_seed(seed, &["matrix"], 0))?;
        let mask_seed = derive_seed(seed, &["mask"], 0);
        let noises = draw_noise(ch.m, ch.sigma, exp.noise_trials, derive_seed(seed, &["noise"], 0));
        let dense = base.clone().with_scale(dense_scale.scale())?;
        let c_dense = capacity_from_noise(&dense.scaled(), &noises, ch.sigma)?.0;
        gammas
            .iter()
            .map(|&g| {
                let sparse = sparsify(&base, g, mask_seed)?.with_scale(Scale::SqrtGamma)?;
                Ok((capacity_from_noise(&sparse.scaled(), &noises, ch.sigma)?.0, c_dense))
            })
            .collect()
    })?;
    Ok(results
        .into_iter()
        .zip(gammas)
        .map(|(r, g)| {
            r.with_param("gamma", g)
                .with_param("dense_scale", format!("{dense_scale:?}"))
                .with_param("n", ch.n)
                .with_param("m", ch.m)
        })
        .collect())
}
