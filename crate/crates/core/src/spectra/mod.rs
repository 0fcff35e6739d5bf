//! Wishart spectra, Stieltjes transforms, MIMO capacity and the sparse–dense
//! Wishart experiments.
//!
//! Stieltjes transforms use the plus-sign convention
//! `S(W, z) = (1/n) tr (W + zI)⁻¹ = (1/n) Σ 1/(z + λ_i)`, which equals the
//! usual `m(w) = ∫ ρ(dx)/(x − w)` evaluated at `w = −z`. Consequently
//! `Im S` and `Im z` have opposite signs.

pub mod eigen;
pub mod laws;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_standard, sparsify, EnsembleSpec, Scale};
use crate::error::{Error, Result};
use crate::harness::comparison::{run_paired_multi, ComparisonResult};
use crate::harness::seed::derive_seed;
use crate::numerics::linalg::{ctrace, rcmatmul, shifted_inverse};
use crate::numerics::Matrix;

pub use eigen::{eigenvalues_symmetric, gram_spectrum, SpectralSummary};
pub use laws::{
    kesten_mckay_cdf, kesten_mckay_density, kesten_mckay_edge, marchenko_pastur_atom,
    marchenko_pastur_cdf, marchenko_pastur_density, marchenko_pastur_edges,
    marchenko_pastur_stieltjes, semicircle_cdf, semicircle_density,
};

fn require_complex(z: Complex64) -> Result<()> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        Err(Error::param("z", format!("{z} must have a nonzero imaginary part")))
    } else {
        Ok(())
    }
}

/// `(1/n) Σ 1/(z + λ_i)`.
pub fn stieltjes(summary: &SpectralSummary, z: Complex64) -> Result<Complex64> {
    require_complex(z)?;
    stieltjes_of(&summary.eigenvalues, z)
}

fn stieltjes_of(eigenvalues: &[f64], z: Complex64) -> Result<Complex64> {
    if eigenvalues.is_empty() {
        return Err(Error::dim("empty spectrum"));
    }
    let s: Complex64 = eigenvalues.iter().map(|&l| (z + l).inv()).sum();
    Ok(s / eigenvalues.len() as f64)
}

/// `(1/2n) Σ log(1 + λ_i(HᵀH)/σ²)` over the `n = cols(H)` eigenvalues.
pub fn mimo_capacity(h: &Matrix, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", format!("{sigma} must be positive")));
    }
    let spec = gram_spectrum(h, 1.0)?;
    Ok(mimo_from_eigenvalues(&spec.eigenvalues, sigma))
}

fn mimo_from_eigenvalues(eigenvalues: &[f64], sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let n = eigenvalues.len() as f64;
    eigenvalues
        .iter()
        .map(|&l| (l.max(0.0) / s2).ln_1p())
        .sum::<f64>()
        / (2.0 * n)
}

/// Kolmogorov–Smirnov distance between an empirical sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let k = xs.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        worst = worst.max((f - i as f64 / k).abs()).max(((j + 1) as f64 / k - f).abs());
        i = j + 1;
    }
    worst
}

/// Analytic and finite-difference derivatives of
/// `f(A) = (1/n) tr (AᵀA + zI)⁻¹` in the entry `A_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub analytic: [Complex64; 3],
    pub finite_diff: [Complex64; 3],
    pub rel_err: [f64; 3],
    /// `(1/n)(6‖D‖³/|v|⁴ + 12‖D‖/|v|³)` with `‖D‖` the Frobenius norm of
    /// `∂_ij(AᵀA)` and `v = Im z`.
    pub third_bound: f64,
    pub analytic_3rd_bound_ok: bool,
}

impl ResolventCheck {
    pub fn analytic_1st(&self) -> Complex64 {
        self.analytic[0]
    }

    pub fn fd_1st(&self) -> Complex64 {
        self.finite_diff[0]
    }
}

/// Step used for the second-order central difference.
pub const RESOLVENT_H2: f64 = 1e-4;
/// Step used for the five-point third difference.
pub const RESOLVENT_H3: f64 = 2e-3;

fn resolvent_trace(a: &Matrix, z: Complex64) -> Result<Complex64> {
    let n = a.cols();
    let r = shifted_inverse(&a.gram(1.0), z)?;
    Ok(ctrace(&r, n) / n as f64)
}

/// Checks the trace identities for the first three derivatives of the
/// resolvent trace in `A_ij` against central differences (`h` for the first
/// derivative, [`RESOLVENT_H2`] and [`RESOLVENT_H3`] for the others).
pub fn resolvent_derivative_check(
    a: &Matrix,
    z: Complex64,
    i: usize,
    j: usize,
    h: f64,
) -> Result<ResolventCheck> {
    require_complex(z)?;
    let (m, n) = (a.rows(), a.cols());
    if i >= m || j >= n {
        return Err(Error::dim(format!("entry ({i},{j}) outside {m}x{n}")));
    }
    if n > 12 {
        return Err(Error::dim("resolvent checks are limited to n <= 12"));
    }
    let r = shifted_inverse(&a.gram(1.0), z)?;
    // D = 1_ji A + Aᵀ 1_ij, D2 = 2·1_jj
    let mut d = Matrix::zeros(n, n);
    for k in 0..n {
        d[(j, k)] += a[(i, k)];
        d[(k, j)] += a[(i, k)];
    }
    let mut d2 = Matrix::zeros(n, n);
    d2[(j, j)] = 2.0;
    let nf = n as f64;
    let r2 = crate::numerics::linalg::cmatmul(&r, &r, n);
    let dr = rcmatmul(&d, &r);
    let dr2 = rcmatmul(&d, &r2);
    let d2r2 = rcmatmul(&d2, &r2);
    let d2r = rcmatmul(&d2, &r);
    let mul = |x: &[Complex64], y: &[Complex64]| crate::numerics::linalg::cmatmul(x, y, n);
    let first = -ctrace(&dr2, n) / nf;
    let second = 2.0 * ctrace(&mul(&dr, &dr2), n) / nf - ctrace(&d2r2, n) / nf;
    let third = -6.0 * ctrace(&mul(&dr, &mul(&dr, &dr2)), n) / nf
        + 3.0 * (ctrace(&mul(&d2r, &dr2), n) + ctrace(&mul(&dr, &d2r2), n)) / nf;

    let f = |t: f64| -> Result<Complex64> {
        let mut b = a.clone();
        b[(i, j)] += t;
        resolvent_trace(&b, z)
    };
    let f0 = f(0.0)?;
    let fd1 = (f(h)? - f(-h)?) / (2.0 * h);
    let h2 = RESOLVENT_H2;
    let fd2 = (f(h2)? - 2.0 * f0 + f(-h2)?) / (h2 * h2);
    let h3 = RESOLVENT_H3;
    let fd3 = (f(2.0 * h3)? - 2.0 * f(h3)? + 2.0 * f(-h3)? - f(-2.0 * h3)?) / (2.0 * h3.powi(3));

    let analytic = [first, second, third];
    let finite_diff = [fd1, fd2, fd3];
    let mut rel_err = [0.0; 3];
    for k in 0..3 {
        rel_err[k] = (analytic[k] - finite_diff[k]).norm() / analytic[k].norm().max(1e-12);
    }
    let dn = d.frobenius_sq().sqrt();
    let v = z.im.abs();
    let third_bound = (6.0 * dn.powi(3) / v.powi(4) + 12.0 * dn / v.powi(3)) / nf;
    Ok(ResolventCheck {
        analytic,
        finite_diff,
        rel_err,
        third_bound,
        analytic_3rd_bound_ok: third.norm() <= third_bound * (1.0 + 1e-9),
    })
}

/// Parameters shared by the Wishart and MIMO sparse–dense experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WishartConfig {
    pub spec: EnsembleSpec,
    pub gammas: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
    pub z_list: Vec<Complex64>,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl WishartConfig {
    pub fn m(&self) -> usize {
        (self.alpha * self.n as f64).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m() == 0 {
            return Err(Error::dim("n and round(alpha n) must be positive"));
        }
        if self.gammas.is_empty() {
            return Err(Error::param("gammas", "at least one value is required"));
        }
        if let Some(&g) = self.gammas.iter().find(|&&g| !(g > 0.0) || g > self.n as f64) {
            return Err(Error::param("gammas", format!("{g} is outside (0, n]")));
        }
        for z in &self.z_list {
            require_complex(*z)?;
        }
        if !(self.sigma > 0.0) {
            return Err(Error::param("sigma", "must be positive"));
        }
        Ok(())
    }
}

/// Stieltjes gap at one `(γ, z)`: real and imaginary parts are paired
/// separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StieltjesGap {
    pub gamma: f64,
    pub z: Complex64,
    pub re: ComparisonResult,
    pub im: ComparisonResult,
}

impl StieltjesGap {
    /// `|E S(W^γ) − E S(W)|`.
    pub fn abs_gap(&self) -> f64 {
        Complex64::new(self.re.estimate, self.im.estimate).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoGap {
    pub gamma: f64,
    pub result: ComparisonResult,
}

/// Empirical mean of `(1/(nγ²)) tr(((A^γ)ᵀA^γ)²)` and its exact expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMoment {
    pub gamma: f64,
    pub empirical_mean: f64,
    pub analytic: f64,
}

/// Dense Stieltjes transform averaged over trials next to the MP limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseVsLimit {
    pub z: Complex64,
    pub empirical: Complex64,
    pub closed_form: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WishartSweep {
    pub stieltjes: Vec<StieltjesGap>,
    pub mimo: Vec<MimoGap>,
    pub trace_moment: Vec<TraceMoment>,
    pub dense_vs_limit: Vec<DenseVsLimit>,
}

/// `E[(1/(nγ²)) tr(((A^γ)ᵀA^γ)²)]` for an `m × n` matrix whose entries are
/// i.i.d. standard draws kept with probability `γ/n`:
/// `(n−1)m/n² + m μ₄/(nγ) + m(m−1)/n²`.
pub fn trace_second_moment(m: usize, n: usize, gamma: f64, mu4: f64) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    (nf - 1.0) * mf / (nf * nf) + mf * mu4 / (nf * gamma) + mf * (mf - 1.0) / (nf * nf)
}

/// Runs paired trials: the dense side is `W = (1/n)BᵀB`, each sparse side
/// is `(1/γ)(A^γ)ᵀA^γ` where `A^γ` thins the same `B` with a mask seed
/// shared across `γ`.
pub fn wishart_sweep(cfg: &WishartConfig) -> Result<WishartSweep> {
    cfg.validate()?;
    let (m, n) = (cfg.m(), cfg.n);
    let ng = cfg.gammas.len();
    let nz = cfg.z_list.len();
    let mut outputs = Vec::new();
    for g in &cfg.gammas {
        for z in &cfg.z_list {
            outputs.push(format!("stieltjes_re[gamma={g},z={z}]"));
            outputs.push(format!("stieltjes_im[gamma={g},z={z}]"));
        }
    }
    for g in &cfg.gammas {
        outputs.push(format!("mimo[gamma={g}]"));
    }
    for g in &cfg.gammas {
        outputs.push(format!("trace_moment[gamma={g}]"));
    }
    for z in &cfg.z_list {
        outputs.push(format!("dense_re[z={z}]"));
        outputs.push(format!("dense_im[z={z}]"));
    }
    let results = run_paired_multi("spectra.sparse-dense", &outputs, cfg.seed, cfg.trials, cfg.workers, |_, seed| {
        let base = sample_standard(&cfg.spec, m, n, derive_seed(seed, &["matrix"], 0))?;
        let mask_seed = derive_seed(seed, &["mask"], 0);
        let dense = gram_spectrum(&base.raw(), 1.0 / n as f64)?;
        let dense_s: Vec<Complex64> = cfg
            .z_list
            .iter()
            .map(|&z| stieltjes_of(&dense.eigenvalues, z))
            .collect::<Result<_>>()?;
        let dense_c = mimo_from_eigenvalues(&dense.eigenvalues, cfg.sigma);
        let mut st = Vec::with_capacity(2 * ng * nz);
        let mut mi = Vec::with_capacity(ng);
        let mut tm = Vec::with_capacity(ng);
        for &g in &cfg.gammas {
            let sparse = sparsify(&base, g, mask_seed)?.with_scale(Scale::SqrtGamma)?;
            let w = sparse.raw().gram(1.0 / g);
            let spec = eigenvalues_symmetric(&w)?;
            for (k, &z) in cfg.z_list.iter().enumerate() {
                let s = stieltjes_of(&spec.eigenvalues, z)?;
                st.push((s.re, dense_s[k].re));
                st.push((s.im, dense_s[k].im));
            }
            mi.push((mimo_from_eigenvalues(&spec.eigenvalues, cfg.sigma), dense_c));
            tm.push((w.frobenius_sq() / n as f64, 0.0));
        }
        let mut out = st;
        out.extend(mi);
        out.extend(tm);
        for (k, &z) in cfg.z_list.iter().enumerate() {
            let limit = marchenko_pastur_stieltjes(z, cfg.alpha_effective(m))?;
            out.push((dense_s[k].re, limit.re));
            out.push((dense_s[k].im, limit.im));
        }
        Ok(out)
    })?;
    let mut it = results.into_iter();
    let mut stieltjes = Vec::new();
    for &g in &cfg.gammas {
        for &z in &cfg.z_list {
            let re = it.next().expect("re");
            let im = it.next().expect("im");
            stieltjes.push(StieltjesGap { gamma: g, z, re, im });
        }
    }
    let mimo = cfg
        .gammas
        .iter()
        .map(|&g| MimoGap {
            gamma: g,
            result: it.next().expect("mimo").with_param("sigma", cfg.sigma),
        })
        .collect();
    let mu4 = cfg.spec.moment(4);
    let trace_moment = cfg
        .gammas
        .iter()
        .map(|&g| TraceMoment {
            gamma: g,
            empirical_mean: it.next().expect("trace").mean_a,
            analytic: trace_second_moment(m, n, g, mu4),
        })
        .collect();
    let dense_vs_limit = cfg
        .z_list
        .iter()
        .map(|&z| {
            let re = it.next().expect("dense re");
            let im = it.next().expect("dense im");
            DenseVsLimit {
                z,
                empirical: Complex64::new(re.mean_a, im.mean_a),
                closed_form: Complex64::new(re.mean_b, im.mean_b),
            }
        })
        .collect();
    Ok(WishartSweep {
        stieltjes,
        mimo,
        trace_moment,
        dense_vs_limit,
    })
}

impl WishartConfig {
    /// Aspect ratio actually realized by the rounded row count.
    fn alpha_effective(&self, m: usize) -> f64 {
        m as f64 / self.n as f64
    }
}

/// Stieltjes part of [`wishart_sweep`].
pub fn sparse_dense_spectra_experiment(cfg: &WishartConfig) -> Result<Vec<StieltjesGap>> {
    Ok(wishart_sweep(cfg)?.stieltjes)
}

/// MIMO part of [`wishart_sweep`] together with the trace moment check.
pub fn mimo_sparse_dense_experiment(cfg: &WishartConfig) -> Result<(Vec<MimoGap>, Vec<TraceMoment>)> {
    let sweep = wishart_sweep(cfg)?;
    Ok((sweep.mimo, sweep.trace_moment))
}
