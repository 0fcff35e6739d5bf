//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p univlab-core --test acceptance`. All randomness
//! derives from [`MASTER_SEED`]; tolerances are the constants below.

use std::time::Instant;

use univlab_core::cdma::{self, CdmaChannel, CdmaExperiment, DenseScale};
use univlab_core::ensembles::{sample_standard, EnsembleSpec, Scale};
use univlab_core::harness::{self, bootstrap_mean_ci, derive_seed, fit_rate, nonincreasing, ExperimentConfig};
use univlab_core::lasso::{self, GridMode, GridSpec, LassoExperiment, DEFAULT_TOL};
use univlab_core::lindeberg::{random_case, verify_bound, swap_experiment, SwapMode};
use univlab_core::numerics::rng::{open01, seeded, standard_normal};
use univlab_core::numerics::{Complex64, Matrix};
use univlab_core::replica::{self, Calibration, QuadratureSpec};
use univlab_core::sk::{self, SkExperiment, SkInstance};
use univlab_core::spectra::{self, WishartConfig};

const MASTER_SEED: u64 = 1;

// criterion 1
const ALPHA_S_RANGE: (f64, f64) = (1.44, 1.54);
const ALPHA_S_TOL: f64 = 1e-3;
// criterion 2
const KM_SUP_NORM: f64 = 0.01;
const KM_GRID: usize = 401;
// criterion 3
const LINDEBERG_CASES: u64 = 100;
const TELESCOPE_TOL: f64 = 1e-10;
// criteria 4, 7, 9
const HALF_WIDTH: f64 = 0.01;
// criterion 6
const REPLICA_AGREEMENT: f64 = 0.05;
// criterion 8
const MP_STIELTJES_TOL: f64 = 0.01;
const MP_KS_GATE: f64 = 0.05;
const SPARSE_FINAL: f64 = 0.02;
const TRACE_FACTOR: f64 = 2.0;
// criterion 10
const DERIVATIVE_REL_ERR: f64 = 1e-4;
// criterion 11
const COVERAGE: (f64, f64) = (0.92, 0.98);

fn seed_for(label: &str) -> u64 {
    derive_seed(MASTER_SEED, &["acceptance", label], 0)
}

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, secs: f64, budget: f64, detail: String) {
        let ok = pass && secs < budget;
        if !ok {
            self.failed.push(id);
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        let over = if secs >= budget { " [over time budget]" } else { "" };
        println!("criterion {id:>2}: {verdict} ({secs:.1} s / {budget:.0} s){over} {detail}");
    }

    fn note(&self, id: u32, detail: String) {
        println!("criterion {id:>2}:      {detail}");
    }
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let a = replica::find_alpha_s(&replica::default_sigma2_grid(), 1.0, 2.0, ALPHA_S_TOL);
    let secs = t.elapsed().as_secs_f64();
    match a {
        Ok(a) => r.line(1, a >= ALPHA_S_RANGE.0 && a <= ALPHA_S_RANGE.1, secs, 120.0, format!("alpha_s = {a:.4}, target [{}, {}]", ALPHA_S_RANGE.0, ALPHA_S_RANGE.1)),
        Err(e) => r.line(1, false, secs, 120.0, format!("error: {e}")),
    }
}

fn criterion_2(r: &mut Report) {
    let t = Instant::now();
    let mut edges_ok = true;
    let mut edges = Vec::new();
    for d in [2u32, 3, 10] {
        let e = spectra::kesten_mckay_edge(d).expect("d >= 2");
        edges_ok &= e == 2.0 * (1.0 - 1.0 / d as f64).sqrt();
        edges.push(format!("d={d}: ±{e:.6}"));
    }
    let sup = (0..KM_GRID)
        .map(|k| {
            let x = -2.0 + 4.0 * k as f64 / (KM_GRID - 1) as f64;
            (spectra::kesten_mckay_density(x, 100).expect("d = 100") - spectra::semicircle_density(x)).abs()
        })
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    r.line(2, edges_ok && sup < KM_SUP_NORM, secs, 1.0, format!("edges exact: {edges_ok} ({}); sup|rho_100 - rho_inf| = {sup:.5}", edges.join(", ")));
}

fn criterion_3(r: &mut Report) {
    let t = Instant::now();
    let (mut thm1, mut thm2, mut tele) = (0, 0, 0);
    let mut worst_tele: f64 = 0.0;
    for k in 0..LINDEBERG_CASES {
        let (pair, f) = random_case(derive_seed(seed_for("lindeberg"), &["case"], k));
        let c = verify_bound(&pair, &f, SwapMode::Exact, 0, 0).expect("exact swap");
        let s = swap_experiment(&pair, &f, SwapMode::Exact, 0, 0).expect("exact swap");
        thm1 += c.satisfied_thm1.unwrap_or(false) as u32;
        thm2 += c.satisfied_thm2 as u32;
        let dev = (s.total - s.direct).abs();
        worst_tele = worst_tele.max(dev);
        tele += (dev <= TELESCOPE_TOL) as u32;
    }
    let secs = t.elapsed().as_secs_f64();
    let n = LINDEBERG_CASES as u32;
    r.line(
        3,
        thm1 == n && thm2 == n && tele == n,
        secs,
        60.0,
        format!("derivative bound {thm1}/{n}, integral bound {thm2}/{n}, telescoping {tele}/{n} (max dev {worst_tele:.1e})"),
    );
}

fn cdma_exp(n: usize, alpha: f64, seed: u64) -> CdmaExperiment {
    CdmaExperiment {
        channel: CdmaChannel::new(n, alpha, 1.0).expect("valid channel"),
        matrix_trials: 100,
        noise_trials: 200,
        seed,
        workers: None,
    }
}

fn criterion_4(r: &mut Report) {
    let t = Instant::now();
    let (g, rad) = (EnsembleSpec::gaussian(), EnsembleSpec::rademacher());
    let mut rows = Vec::new();
    let mut main = None;
    for n in [6usize, 10, 14] {
        let res = cdma::universality_experiment(&g, &rad, &cdma_exp(n, 1.5, seed_for("cdma.universality"))).expect("cdma universality");
        if n == 10 {
            main = Some(res.clone());
        }
        rows.push((n as f64, res.estimate));
    }
    let main = main.expect("n = 10 ran");
    let fit = fit_rate(&rows).expect("three points");
    let secs = t.elapsed().as_secs_f64();
    let diffs: Vec<String> = rows.iter().map(|(n, d)| format!("n={n}: {:.4}", d.abs())).collect();
    r.line(
        4,
        main.ci_contains(0.0) && main.half_width() < HALF_WIDTH && fit.slope <= 0.0,
        secs,
        600.0,
        format!(
            "n=10 diff {:.4} CI [{:.4}, {:.4}] hw {:.4}; |diff| {}; log-log slope {:.2}",
            main.estimate, main.ci_lo, main.ci_hi, main.half_width(), diffs.join(", "), fit.slope
        ),
    );
}

fn criterion_5(r: &mut Report) {
    let t = Instant::now();
    let spec = EnsembleSpec::gaussian();
    let exp = cdma_exp(12, 1.0, seed_for("cdma.sparse-dense"));
    let stated = cdma::sparse_dense_experiment(&spec, &[4.0, 16.0, 64.0], &exp, DenseScale::SqrtCols);
    let verdict = match &stated {
        Ok(res) => {
            let abs: Vec<f64> = res.iter().map(|x| x.estimate.abs()).collect();
            (nonincreasing(&abs, 0.0), format!("|diff| {abs:.4?}"))
        }
        Err(e) => (false, format!("gammas {{4, 16, 64}} at n = 12: {e}")),
    };
    let secs = t.elapsed().as_secs_f64();
    r.line(5, verdict.0, secs, 600.0, verdict.1);
    // at alpha = 1 the two dense conventions coincide; alpha = 1.5 separates them
    for alpha in [1.0, 1.5] {
        let exp = cdma_exp(12, alpha, seed_for("cdma.sparse-dense"));
        for (scale, name) in [(DenseScale::SqrtCols, "n^-1/2"), (DenseScale::SqrtRows, "m^-1/2")] {
            let res = cdma::sparse_dense_experiment(&spec, &[3.0, 6.0, 12.0], &exp, scale).expect("feasible sweep");
            let abs: Vec<f64> = res.iter().map(|x| x.estimate.abs()).collect();
            r.note(
                5,
                format!("supplementary alpha {alpha}, gammas {{3, 6, 12}}, {name} dense: |diff| {abs:.4?}, nonincreasing {}", nonincreasing(&abs, 0.0)),
            );
        }
    }
}

fn criterion_6(r: &mut Report) {
    let t = Instant::now();
    let m = replica::minimize_crs(1.0, 1.0, replica::DEFAULT_GRID, replica::DEFAULT_REFINE_TOL, &QuadratureSpec::default()).expect("minimize");
    let ch = CdmaChannel::new(14, 1.0, 1.0).expect("channel");
    let base = seed_for("replica.vs.mc");
    let caps: Vec<f64> = (0..100u64)
        .map(|k| {
            let s = derive_seed(base, &["matrix"], k);
            let a = sample_standard(&EnsembleSpec::gaussian(), ch.m, ch.n, s).and_then(|a| a.with_scale(Scale::SqrtRows)).expect("sample");
            cdma::capacity_exact(&a, &ch, 200, derive_seed(base, &["noise"], k)).expect("capacity").mean
        })
        .collect();
    let mc = caps.iter().sum::<f64>() / caps.len() as f64;
    let calibrated = m.calibrated(Calibration::PlusLog2);
    let secs = t.elapsed().as_secs_f64();
    r.line(
        6,
        (calibrated - mc).abs() < REPLICA_AGREEMENT,
        secs,
        600.0,
        format!(
            "min C_RS + log 2 = {calibrated:.5} (q* = {:.4}), Monte Carlo n=14 = {mc:.5}, |gap| {:.4}; uncalibrated {:.5}, |gap| {:.4}",
            m.q_star,
            (calibrated - mc).abs(),
            m.value,
            (m.value - mc).abs()
        ),
    );
}

fn criterion_7(r: &mut Report) {
    let t = Instant::now();
    let exp = LassoExperiment {
        n: 200,
        alpha: 0.5,
        sigma: 1.0,
        reg_weight: 0.5,
        rho: 0.2,
        x_max: 2.0,
        trials: 200,
        seed: seed_for("lasso.universality"),
        workers: None,
    };
    let uni = lasso::universality_experiment(&EnsembleSpec::gaussian(), &EnsembleSpec::rademacher(), &exp).expect("lasso universality");
    let small = LassoExperiment { n: 4, trials: 1, ..exp.clone() };
    let delta = 0.5;
    let grid = GridSpec::new(delta, small.x_max).expect("grid");
    let betas = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let log_x = (grid.len() as f64).ln();
    let (mut sandwich, mut temps) = (0, 0);
    for k in 0..50u64 {
        let p = lasso::trial_problem(&EnsembleSpec::gaussian(), &small, derive_seed(seed_for("lasso.grid"), &[], k)).expect("problem");
        let (l, _) = lasso::normalized_cost(&p, DEFAULT_TOL).expect("solve");
        let ld = lasso::grid_cost(&p, &grid, GridMode::Exact).expect("grid cost");
        let c = lasso::grid_gap_bound(&p, delta).expect("bound").total();
        sandwich += (l <= ld + 1e-12 && ld <= l + c + 1e-12) as u32;
        let all = betas.iter().all(|&b| {
            let f = lasso::finite_temp_free_energy(&p, &grid, b).expect("free energy");
            let gap = ld - f;
            gap >= -1e-12 && gap <= log_x / b + 1e-12
        });
        temps += all as u32;
    }
    let secs = t.elapsed().as_secs_f64();
    r.line(
        7,
        uni.ci_contains(0.0) && uni.half_width() < HALF_WIDTH && sandwich == 50 && temps == 50,
        secs,
        300.0,
        format!(
            "diff {:.5} CI [{:.5}, {:.5}] hw {:.5}; sandwich {sandwich}/50; temperature bounds {temps}/50",
            uni.estimate, uni.ci_lo, uni.ci_hi, uni.half_width()
        ),
    );
}

fn criterion_8(r: &mut Report) {
    let t = Instant::now();
    let z = Complex64::new(1.0, 1.0);
    let cfg = WishartConfig {
        spec: EnsembleSpec::gaussian(),
        gammas: vec![10.0, 40.0, 160.0],
        n: 300,
        alpha: 2.0,
        z_list: vec![z],
        sigma: 1.0,
        trials: 20,
        seed: seed_for("wishart"),
        workers: None,
    };
    // gate: pooled dense eigenvalues against the Marchenko–Pastur distribution
    let mut eig = Vec::new();
    for k in 0..5u64 {
        let b = sample_standard(&cfg.spec, cfg.m(), cfg.n, derive_seed(seed_for("wishart.gate"), &[], k)).expect("sample");
        eig.extend(spectra::gram_spectrum(&b.raw(), 1.0 / cfg.n as f64).expect("spectrum").eigenvalues);
    }
    let ks = spectra::ks_distance(&eig, |x| spectra::marchenko_pastur_cdf(x, cfg.alpha).expect("cdf"));
    let sweep = spectra::wishart_sweep(&cfg).expect("sweep");
    let dense = sweep.dense_vs_limit[0];
    let dense_err = (dense.empirical - dense.closed_form).norm();
    let ds: Vec<f64> = sweep.stieltjes.iter().map(|g| g.abs_gap()).collect();
    let dc: Vec<f64> = sweep.mimo.iter().map(|g| g.result.estimate.abs()).collect();
    let trace_cap = TRACE_FACTOR * spectra::trace_second_moment(cfg.m(), cfg.n, 1.0, cfg.spec.moment(4));
    let trace_ok = sweep
        .trace_moment
        .iter()
        .all(|t| t.empirical_mean <= trace_cap && t.empirical_mean / t.analytic <= TRACE_FACTOR && t.analytic / t.empirical_mean <= TRACE_FACTOR);
    let pass = ks < MP_KS_GATE
        && dense_err < MP_STIELTJES_TOL
        && nonincreasing(&ds, 0.0)
        && nonincreasing(&dc, 0.0)
        && ds[2] < SPARSE_FINAL
        && dc[2] < SPARSE_FINAL
        && trace_ok;
    let secs = t.elapsed().as_secs_f64();
    let tm: Vec<String> = sweep.trace_moment.iter().map(|t| format!("{:.3}/{:.3}", t.empirical_mean, t.analytic)).collect();
    r.line(
        8,
        pass,
        secs,
        300.0,
        format!("MP gate KS {ks:.4}; dense |S - S_MP| {dense_err:.5}; |dS| {ds:.5?}; |dC| {dc:.5?}; trace moment empirical/exact {}", tm.join(", ")),
    );
}

fn criterion_9(r: &mut Report) {
    let t = Instant::now();
    let exp = SkExperiment { n: 12, beta: 1.0, trials: 500, seed: seed_for("sk.universality"), workers: None };
    let uni = sk::universality_experiment(&EnsembleSpec::gaussian(), &EnsembleSpec::rademacher(), &exp).expect("sk universality");
    let mut rng = seeded(seed_for("sk.derivative"));
    let mut within = 0;
    for k in 0..50u64 {
        let n = 4 + (k as usize % 6);
        let a = sample_standard(&EnsembleSpec::gaussian(), n, n, derive_seed(seed_for("sk.derivative"), &[], k))
            .and_then(|a| a.with_scale(Scale::SqrtCols))
            .expect("sample");
        let inst = SkInstance::new(a, 1.0).expect("instance");
        let r_ = (open01(&mut rng) * n as f64) as usize;
        let c_ = (r_ + 1 + (open01(&mut rng) * (n - 1) as f64) as usize) % n;
        let chk = sk::sk_third_derivative_check(&inst, r_, c_, 1e-2).expect("check");
        within += chk.ok as u32;
    }
    let gammas = [2.0, 4.0, 8.0, 12.0];
    let sweep = sk::sparse_dense_experiment(&EnsembleSpec::gaussian(), &gammas, &SkExperiment { seed: seed_for("sk.sparse"), ..exp.clone() })
        .expect("sk sweep");
    let abs: Vec<f64> = sweep.iter().map(|x| x.estimate.abs()).collect();
    let secs = t.elapsed().as_secs_f64();
    r.line(
        9,
        uni.ci_contains(0.0) && uni.half_width() < HALF_WIDTH && within == 50 && nonincreasing(&abs, 0.0),
        secs,
        600.0,
        format!(
            "diff {:.5} CI [{:.5}, {:.5}] hw {:.5}; third difference within bound {within}/50; sparse |diff| at gamma {gammas:?}: {abs:.4?}",
            uni.estimate, uni.ci_lo, uni.ci_hi, uni.half_width()
        ),
    );
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl rand::RngCore) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| scale * standard_normal(rng)).collect()).expect("shape")
}

fn criterion_10(r: &mut Report) {
    let t = Instant::now();
    let mut rng = seeded(seed_for("derivatives"));
    let (mut cdma_ok, mut wish_ok) = (0, 0);
    let (mut cdma_worst, mut wish_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let n = 2 + (open01(&mut rng) * 5.0) as usize;
        let m = 2 + (open01(&mut rng) * 6.0) as usize;
        let sigma = 0.7 + 0.8 * open01(&mut rng);
        let a = random_matrix(m, n, 1.0 / (m as f64).sqrt(), &mut rng);
        let z: Vec<f64> = (0..m).map(|_| sigma * standard_normal(&mut rng)).collect();
        let (rr, cc) = ((open01(&mut rng) * m as f64) as usize, (open01(&mut rng) * n as f64) as usize);
        let chk = cdma::third_derivative_check(&a, &z, sigma, rr, cc, 1e-2).expect("cdma check");
        cdma_worst = cdma_worst.max(chk.rel_err);
        cdma_ok += (chk.rel_err < DERIVATIVE_REL_ERR) as u32;

        let b = random_matrix(m, n, 1.0, &mut rng);
        let zc = Complex64::new(2.0 * open01(&mut rng) - 1.0, 0.5 + 1.5 * open01(&mut rng));
        let (i, j) = ((open01(&mut rng) * m as f64) as usize, (open01(&mut rng) * n as f64) as usize);
        let w = spectra::resolvent_derivative_check(&b, zc, i, j, 1e-5).expect("resolvent check");
        let worst = w.rel_err.iter().cloned().fold(0.0, f64::max);
        wish_worst = wish_worst.max(worst);
        wish_ok += (worst < DERIVATIVE_REL_ERR) as u32;
    }
    let secs = t.elapsed().as_secs_f64();
    r.line(
        10,
        cdma_ok == 50 && wish_ok == 50,
        secs,
        120.0,
        format!("free-energy third derivative {cdma_ok}/50 (max rel err {cdma_worst:.1e}); resolvent derivatives {wish_ok}/50 (max rel err {wish_worst:.1e})"),
    );
}

fn criterion_11(r: &mut Report) {
    let t = Instant::now();
    let text = "experiment = cdma.sparse-dense\nn = 8\ngammas = 2,4,8\ntrials = 20\nnoise_trials = 30\nseed = 17\n";
    let mut cfg = ExperimentConfig::parse(text).expect("config");
    cfg.workers = Some(1);
    let serial = harness::run(&cfg).expect("run").trials_csv();
    let again = harness::run(&ExperimentConfig { workers: Some(1), ..ExperimentConfig::parse(text).expect("config") })
        .expect("run")
        .trials_csv();
    cfg.workers = Some(4);
    let parallel = harness::run(&cfg).expect("run").trials_csv();
    let reproducible = serial == again;
    let worker_free = serial == parallel;

    let reps = 500;
    let mut rng = seeded(seed_for("coverage"));
    let mut covered = 0;
    for k in 0..reps {
        let data: Vec<f64> = (0..100).map(|_| standard_normal(&mut rng)).collect();
        let ci = bootstrap_mean_ci(&data, 10_000, 0.95, derive_seed(seed_for("coverage"), &["boot"], k)).expect("ci");
        covered += ci.contains(0.0) as u32;
    }
    let coverage = covered as f64 / reps as f64;
    let secs = t.elapsed().as_secs_f64();
    r.line(
        11,
        reproducible && worker_free && coverage >= COVERAGE.0 && coverage <= COVERAGE.1,
        secs,
        600.0,
        format!("bit-exact rerun {reproducible}; 1 vs 4 workers identical {worker_free}; bootstrap coverage {coverage:.3} over {reps} data sets"),
    );
}

fn main() {
    // `cargo test` passes harness flags; a name filter other than ours skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut r = Report { failed: Vec::new() };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    criterion_11(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", r.failed);
        std::process::exit(1);
    }
}
