//! Sherrington–Kirkpatrick model with a non-symmetrized coupling matrix.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_standard, sparsify, EnsembleSpec, SampledMatrix, Scale};
use crate::error::{Error, Result};
use crate::harness::comparison::{run_paired, run_paired_multi, ComparisonResult};
use crate::harness::seed::derive_seed;
use crate::numerics::{LogSumExp, Matrix, WeightedLogSumExp};

pub const MAX_SPINS: usize = 20;
pub const MAX_SPINS_DERIVATIVE: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkInstance {
    /// `n × n`, all entries independent, scale attached.
    pub a: SampledMatrix,
    pub beta: f64,
}

impl SkInstance {
    pub fn new(a: SampledMatrix, beta: f64) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::dim(format!("coupling matrix is {}x{}", a.rows, a.cols)));
        }
        if a.rows == 0 {
            return Err(Error::dim("at least one spin is required"));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::param("beta", format!("{beta} must be a finite nonnegative number")));
        }
        Ok(Self { a, beta })
    }

    pub fn n(&self) -> usize {
        self.a.rows
    }
}

/// `−(1/√2) Σ_{i,j} A_ij x_i x_j` on the scaled matrix.
pub fn sk_hamiltonian(x: &[f64], inst: &SkInstance) -> Result<f64> {
    hamiltonian_scaled(x, &inst.a.scaled())
}

fn hamiltonian_scaled(x: &[f64], a: &Matrix) -> Result<f64> {
    if x.len() != a.rows() {
        return Err(Error::dim(format!("{} spins for a {}-spin instance", x.len(), a.rows())));
    }
    if let Some(v) = x.iter().find(|v| v.abs() != 1.0) {
        return Err(Error::param("x", format!("spin value {v} is not ±1")));
    }
    let ax = a.matvec(x)?;
    Ok(-x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>() / SQRT_2)
}

fn check_square(a: &Matrix, cap: usize) -> Result<()> {
    if a.rows() != a.cols() || a.rows() == 0 {
        return Err(Error::dim(format!("coupling matrix is {}x{}", a.rows(), a.cols())));
    }
    if a.rows() > cap {
        return Err(Error::EnumerationTooLarge {
            size: 2f64.powi(a.rows() as i32),
            limit: 2f64.powi(cap as i32),
        });
    }
    Ok(())
}

/// Visits all `x ∈ {±1}ⁿ` in Gray-code order starting from all `+1`,
/// passing `(x, −H(x))` to the callback. Local fields
/// `h_i = Σ_{j≠i} (A_ij + A_ji) x_j` are updated in `O(n)` per flip.
fn enumerate_spins<F: FnMut(&[f64], f64)>(a: &Matrix, mut visit: F) {
    let n = a.rows();
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s[i * n + j] = a[(i, j)] + a[(j, i)];
            }
        }
    }
    let mut x = vec![1.0; n];
    let mut field: Vec<f64> = (0..n).map(|i| s[i * n..(i + 1) * n].iter().sum()).collect();
    // xᵀAx at x = 1
    let mut quad: f64 = a.as_slice().iter().sum();
    visit(&x, quad / SQRT_2);
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let old = x[j];
        quad -= 2.0 * old * field[j];
        x[j] = -old;
        let row = &s[j * n..(j + 1) * n];
        for (f, sij) in field.iter_mut().zip(row) {
            *f -= 2.0 * old * sij;
        }
        visit(&x, quad / SQRT_2);
    }
}

/// `(1/n) log Σ_x exp(−β H(x))` for an already scaled matrix.
pub fn free_entropy_matrix(a: &Matrix, beta: f64) -> Result<f64> {
    check_square(a, MAX_SPINS)?;
    let mut acc = LogSumExp::new();
    enumerate_spins(a, |_, minus_h| acc.push(beta * minus_h));
    Ok(acc.value() / a.rows() as f64)
}

pub fn free_entropy(inst: &SkInstance) -> Result<f64> {
    free_entropy_matrix(&inst.a.scaled(), inst.beta)
}

/// Minimum and maximum of `H` over `{±1}ⁿ`.
pub fn energy_range(a: &Matrix) -> Result<(f64, f64)> {
    check_square(a, MAX_SPINS)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    enumerate_spins(a, |_, minus_h| {
        lo = lo.min(-minus_h);
        hi = hi.max(-minus_h);
    });
    Ok((lo, hi))
}

/// Gibbs average of `x_r x_c` at inverse temperature `β`.
pub fn overlap_average(a: &Matrix, beta: f64, r: usize, c: usize) -> Result<f64> {
    check_square(a, MAX_SPINS)?;
    let mut acc = WeightedLogSumExp::new(1);
    enumerate_spins(a, |x, minus_h| acc.push(beta * minus_h, &[x[r] * x[c]]));
    Ok(acc.averages()[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkDerivativeCheck {
    /// `−(β³/(√2 n)) ⟨x_r x_c⟩(1 − ⟨x_r x_c⟩²)`.
    pub analytic: f64,
    pub analytic_mag: f64,
    pub fd: f64,
    /// `β³/(√2 n)`.
    pub bound: f64,
    pub ok: bool,
}

/// Third derivative of the free entropy in the scaled entry `A_rc`, `r ≠ c`.
pub fn sk_third_derivative_check(inst: &SkInstance, r: usize, c: usize, h: f64) -> Result<SkDerivativeCheck> {
    third_derivative_matrix(&inst.a.scaled(), inst.beta, r, c, h)
}

pub fn third_derivative_matrix(a: &Matrix, beta: f64, r: usize, c: usize, h: f64) -> Result<SkDerivativeCheck> {
    check_square(a, MAX_SPINS_DERIVATIVE)?;
    let n = a.rows();
    if r >= n || c >= n || r == c {
        return Err(Error::param("(r, c)", format!("({r}, {c}) must be an off-diagonal entry")));
    }
    if !(h > 0.0) {
        return Err(Error::param("h", "step must be positive"));
    }
    let q = overlap_average(a, beta, r, c)?;
    let bound = beta.powi(3) / (SQRT_2 * n as f64);
    let analytic = -bound * q * (1.0 - q * q);
    let f = |t: f64| -> Result<f64> {
        let mut b = a.clone();
        b[(r, c)] += t;
        free_entropy_matrix(&b, beta)
    };
    let fd = (f(2.0 * h)? - 2.0 * f(h)? + 2.0 * f(-h)? - f(-2.0 * h)?) / (2.0 * h.powi(3));
    let ok = fd.abs() <= bound * (1.0 + 1e-6)
        && (fd.abs() - analytic.abs()).abs() < 1e-4 * beta.powi(3) / n as f64;
    Ok(SkDerivativeCheck { analytic, analytic_mag: analytic.abs(), fd, bound, ok })
}

/// Lindeberg envelope for replacing every entry: `β³ (E|U|³ + E|V|³)/(6√2 √n)`.
pub fn universality_envelope(spec_a: &EnsembleSpec, spec_b: &EnsembleSpec, n: usize, beta: f64) -> f64 {
    beta.powi(3) * (spec_a.abs_moment(3) + spec_b.abs_moment(3)) / (6.0 * SQRT_2 * (n as f64).sqrt())
}

/// Sparse–dense envelope: `β³ E|U|³ (1/√γ + 1/√n)/(6√2)`.
pub fn sparse_envelope(spec: &EnsembleSpec, n: usize, gamma: f64, beta: f64) -> f64 {
    beta.powi(3) * spec.abs_moment(3) * (1.0 / gamma.sqrt() + 1.0 / (n as f64).sqrt()) / (6.0 * SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkExperiment {
    pub n: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl SkExperiment {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_SPINS {
            return Err(Error::param("n", format!("{} outside 1..={MAX_SPINS}", self.n)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::param("beta", format!("{} must be nonnegative", self.beta)));
        }
        Ok(())
    }
}

/// Paired free entropies of `n^{-1/2}A` and `n^{-1/2}B` under a shared seed.
pub fn universality_experiment(
    spec_a: &EnsembleSpec,
    spec_b: &EnsembleSpec,
    exp: &SkExperiment,
) -> Result<ComparisonResult> {
    exp.validate()?;
    let n = exp.n;
    let res = run_paired("sk.universality", exp.seed, exp.trials, exp.workers, |_, seed| {
        let mseed = derive_seed(seed, &["matrix"], 0);
        let a = sample_standard(spec_a, n, n, mseed)?.with_scale(Scale::SqrtCols)?;
        let b = sample_standard(spec_b, n, n, mseed)?.with_scale(Scale::SqrtCols)?;
        Ok((
            free_entropy_matrix(&a.scaled(), exp.beta)?,
            free_entropy_matrix(&b.scaled(), exp.beta)?,
        ))
    })?;
    Ok(res
        .with_param("ens_a", spec_a)
        .with_param("ens_b", spec_b)
        .with_param("n", n)
        .with_param("beta", exp.beta)
        .with_param("envelope", universality_envelope(spec_a, spec_b, n, exp.beta)))
}

/// For each `γ`: paired free entropies of `γ^{-1/2}A^γ` and `n^{-1/2}A`,
/// with masks nested across `γ`.
pub fn sparse_dense_experiment(
    spec: &EnsembleSpec,
    gammas: &[f64],
    exp: &SkExperiment,
) -> Result<Vec<ComparisonResult>> {
    exp.validate()?;
    let n = exp.n;
    if gammas.is_empty() {
        return Err(Error::param("gammas", "at least one value is required"));
    }
    if let Some(&g) = gammas.iter().find(|&&g| !(g > 0.0) || g > n as f64) {
        return Err(Error::param(
            "gammas",
            format!("{g} is outside (0, n = {n}]; the keep probability γ/n must not exceed 1"),
        ));
    }
    let outputs: Vec<String> = gammas.iter().map(|g| format!("sk.sparse-dense[gamma={g}]")).collect();
    let results = run_paired_multi("sk.sparse-dense", &outputs, exp.seed, exp.trials, exp.workers, |_, seed| {
        let base = sample_standard(spec, n, n, derive_seed(seed, &["matrix"], 0))?;
        let mask_seed = derive_seed(seed, &["mask"], 0);
        let dense = free_entropy_matrix(&base.clone().with_scale(Scale::SqrtCols)?.scaled(), exp.beta)?;
        gammas
            .iter()
            .map(|&g| {
                let sparse = sparsify(&base, g, mask_seed)?.with_scale(Scale::SqrtGamma)?;
                Ok((free_entropy_matrix(&sparse.scaled(), exp.beta)?, dense))
            })
            .collect()
    })?;
    Ok(results
        .into_iter()
        .zip(gammas)
        .map(|(r, &g)| {
            r.with_param("gamma", g)
                .with_param("n", n)
                .with_param("beta", exp.beta)
                .with_param("envelope", sparse_envelope(spec, n, g, exp.beta))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::logsumexp;
    use std::f64::consts::LN_2;

    fn instance(n: usize, beta: f64, seed: u64) -> SkInstance {
        let a = sample_standard(&EnsembleSpec::gaussian(), n, n, seed)
            .unwrap()
            .with_scale(Scale::SqrtCols)
            .unwrap();
        SkInstance::new(a, beta).unwrap()
    }

    fn naive(a: &Matrix, beta: f64) -> f64 {
        let n = a.rows();
        let terms: Vec<f64> = (0..1u64 << n)
            .map(|b| {
                let x: Vec<f64> = (0..n).map(|j| if b >> j & 1 == 1 { -1.0 } else { 1.0 }).collect();
                -beta * hamiltonian_scaled(&x, a).unwrap()
            })
            .collect();
        logsumexp(&terms) / n as f64
    }

    #[test]
    fn hamiltonian_examples() {
        let one = SampledMatrix::from_entries(1, 1, vec![0.9], Scale::Unit).unwrap();
        let inst = SkInstance::new(one, 1.0).unwrap();
        for x in [1.0, -1.0] {
            assert!((sk_hamiltonian(&[x], &inst).unwrap() + 0.9 / SQRT_2).abs() < 1e-15);
        }
        let id = SampledMatrix::from_entries(3, 3, Matrix::identity(3).into_vec(), Scale::Unit).unwrap();
        let inst = SkInstance::new(id, 1.0).unwrap();
        assert!((sk_hamiltonian(&[1.0, -1.0, 1.0], &inst).unwrap() + 3.0 / SQRT_2).abs() < 1e-15);
        let inst = instance(5, 1.0, 3);
        let x = [1.0, -1.0, -1.0, 1.0, 1.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(sk_hamiltonian(&x, &inst).unwrap(), sk_hamiltonian(&neg, &inst).unwrap());
        assert!(sk_hamiltonian(&[1.0, 0.5, 1.0, 1.0, 1.0], &inst).is_err());
        assert!(sk_hamiltonian(&[1.0; 4], &inst).is_err());
    }

    #[test]
    fn free_entropy_examples() {
        let inst = instance(6, 0.0, 1);
        assert!((free_entropy(&inst).unwrap() - LN_2).abs() < 1e-15);
        let one = SampledMatrix::from_entries(1, 1, vec![-0.4], Scale::Unit).unwrap();
        let inst = SkInstance::new(one, 1.7).unwrap();
        assert!((free_entropy(&inst).unwrap() - (LN_2 - 1.7 * 0.4 / SQRT_2)).abs() < 1e-14);
    }

    #[test]
    fn gray_code_matches_naive() {
        for n in [2usize, 3, 7, 10] {
            let inst = instance(n, 1.3, 40 + n as u64);
            let a = inst.a.scaled();
            let fast = free_entropy_matrix(&a, 1.3).unwrap();
            assert!((fast - naive(&a, 1.3)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn convexity_and_tangent_bounds_in_beta() {
        let a = instance(8, 1.0, 5).a.scaled();
        let (hmin, hmax) = energy_range(&a).unwrap();
        let n = 8.0;
        let grid: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
        let f: Vec<f64> = grid.iter().map(|&b| free_entropy_matrix(&a, b).unwrap()).collect();
        for w in 0..grid.len() - 2 {
            assert!(f[w] + f[w + 2] >= 2.0 * f[w + 1] - 1e-12);
        }
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let d = grid[j] - grid[i];
                assert!(f[j] >= f[i] - d * hmax / n - 1e-12);
                assert!(f[j] <= f[i] - d * hmin / n + 1e-12);
            }
        }
    }

    #[test]
    fn derivative_at_zero_coupling() {
        let zero = SampledMatrix::from_entries(4, 4, vec![0.0; 16], Scale::Unit).unwrap();
        let inst = SkInstance::new(zero, 1.0).unwrap();
        let chk = sk_third_derivative_check(&inst, 0, 2, 1e-2).unwrap();
        assert_eq!(chk.analytic_mag, 0.0);
        assert!(chk.fd.abs() < 1e-8);
        assert!(chk.ok);
    }

    #[test]
    fn derivative_random_instance_within_bound_with_sign() {
        let inst = instance(4, 1.0, 11);
        let chk = sk_third_derivative_check(&inst, 1, 3, 1e-2).unwrap();
        assert!(chk.ok, "{chk:?}");
        assert!(chk.fd.abs() <= 1.0 / (SQRT_2 * 4.0));
        assert_eq!(chk.fd.signum(), chk.analytic.signum());
    }

    #[test]
    fn derivative_rejects_diagonal() {
        let inst = instance(4, 1.0, 1);
        assert!(sk_third_derivative_check(&inst, 2, 2, 1e-2).is_err());
    }

    #[test]
    fn experiments_trivial_cases() {
        let exp = SkExperiment { n: 6, beta: 1.0, trials: 5, seed: 3, workers: None };
        let g = EnsembleSpec::gaussian();
        let r = universality_experiment(&g, &g, &exp).unwrap();
        assert!(r.trials.iter().all(|t| t.diff == 0.0));
        let s = sparse_dense_experiment(&g, &[6.0], &exp).unwrap();
        assert!(s[0].trials.iter().all(|t| t.diff.abs() < 1e-15));
        assert!(sparse_dense_experiment(&g, &[16.0], &exp).is_err());
    }

    #[test]
    fn envelope_scales_cubically_in_beta() {
        let g = EnsembleSpec::gaussian();
        let r = EnsembleSpec::rademacher();
        let e1 = universality_envelope(&g, &r, 12, 1.0);
        let e2 = universality_envelope(&g, &r, 12, 2.0);
        assert!((e2 / e1 - 8.0).abs() < 1e-12);
        assert!((sparse_envelope(&g, 12, 4.0, 2.0) / sparse_envelope(&g, 12, 4.0, 1.0) - 8.0).abs() < 1e-12);
    }
}

#[cfg(test)]
mod proptests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn free_entropy_is_transpose_invariant(
            (n, v) in (2usize..9).prop_flat_map(|n| (Just(n), prop::collection::vec(-3.0f64..3.0, n * n))),
            beta in 0.1f64..2.0,
        ) {
            let a = Matrix::from_vec(n, n, v).unwrap();
            let f = free_entropy_matrix(&a, beta).unwrap();
            let g = free_entropy_matrix(&a.transpose(), beta).unwrap();
            prop_assert!((f - g).abs() < 1e-10 * (1.0 + f.abs()));
        }
    }
}
