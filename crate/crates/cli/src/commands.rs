use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Subcommand};
use serde_json::{json, Value};
use univlab_core::cdma::{self, CdmaChannel};
use univlab_core::ensembles::sample_standard;
use univlab_core::harness::{self, derive_seed, ExperimentConfig, ExperimentKind};
use univlab_core::lasso::{self, GridMode, GridSpec, LassoExperiment, DEFAULT_MAX_ITER, DEFAULT_TOL};
use univlab_core::lindeberg::{bound_holds, swap_experiment_with, ScalarLaw, SwapMode, TestFunction, VectorPair};
use univlab_core::numerics::Complex64;
use univlab_core::replica::{self, Calibration, QuadratureSpec};
use univlab_core::sk;
use univlab_core::spectra::{self, WishartConfig};
use univlab_core::{EnsembleSpec, Error, Scale};

use crate::Global;

const DEFAULT_OUT_DIR: &str = "univlab-out";

/// A command-line level validation failure.
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// 2 for invalid input, 3 for failures while running.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::InvalidDimension(_)
            | Error::InvalidParameter { .. }
            | Error::Parse { .. }
            | Error::EnumerationTooLarge { .. }
            | Error::UnboundedDerivative { .. },
        ) => 2,
        _ => 3,
    }
}

/// Writes to stdout; a closed pipe ends output silently.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("json"));
}

fn seed(g: &Global) -> u64 {
    g.seed.unwrap_or(1)
}

fn read_config(path: &std::path::Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Invalid(format!("cannot read {}: {e}", path.display())).into())
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let path = g.config.as_ref().ok_or_else(|| Invalid("--config is required".into()))?;
    let text = read_config(path)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    apply_global(&mut cfg, g)?;
    Ok(cfg)
}

fn apply_global(cfg: &mut ExperimentConfig, g: &Global) -> Result<()> {
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(w) = g.workers {
        cfg.workers = Some(w);
    }
    if let Some(d) = &g.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    cfg.validate()?;
    Ok(())
}

/// Builds a comparison config from `--config` (which must name `kind`) or
/// the defaults of `kind`, then applies explicit flags and global overrides.
fn comparison_config(kind: ExperimentKind, g: &Global, flags: &[(&str, Option<String>)]) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(path) => {
            let text = read_config(path)?;
            let cfg = ExperimentConfig::parse(&text)?;
            if cfg.experiment != kind {
                return Err(Invalid(format!("config describes {}, not {kind}", cfg.experiment)).into());
            }
            cfg
        }
        None => ExperimentConfig::defaults(kind),
    };
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    apply_global(&mut cfg, g)?;
    Ok(cfg)
}

fn run_and_write(cfg: &ExperimentConfig) -> Result<()> {
    let out = harness::run(cfg)?;
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let (csv, summary) = out.write(&dir)?;
    eprintln!("wrote {} and {}", csv.display(), summary.display());
    print(&out.summary());
    Ok(())
}

pub fn validate(g: &Global) -> Result<()> {
    let cfg = load_config(g)?;
    print(&json!({"valid": true, "experiment": cfg.experiment.id(), "config": cfg.to_text()}));
    Ok(())
}

pub fn run(g: &Global) -> Result<()> {
    run_and_write(&load_config(g)?)
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(|v| v.to_string())
}

// ---------------------------------------------------------------- lindeberg

#[derive(Subcommand)]
pub enum LindebergCmd {
    /// Exact or Monte Carlo swap of V into U with both bounds.
    Verify(LindebergVerify),
}

#[derive(Args)]
pub struct LindebergVerify {
    /// linear, sum-squares, cube, shifted-cube, normalized-cube, sum-quartic, lse
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "rademacher")]
    pub u: EnsembleSpec,
    #[arg(long, default_value = "gaussian")]
    pub v: EnsembleSpec,
    /// exact or mc
    #[arg(long, default_value = "exact")]
    pub mode: SwapMode,
    /// Samples in Monte Carlo mode.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Gauss rule size for continuous coordinates in exact mode.
    #[arg(long, default_value_t = univlab_core::lindeberg::DEFAULT_GAUSS_NODES)]
    pub gauss_nodes: usize,
}

pub fn lindeberg(cmd: &LindebergCmd, g: &Global) -> Result<()> {
    let LindebergCmd::Verify(a) = cmd;
    let pair = VectorPair::iid(ScalarLaw::from_ensemble(&a.u), ScalarLaw::from_ensemble(&a.v), a.n)?;
    let f = TestFunction::named(&a.function, a.n)?;
    let r = swap_experiment_with(&pair, &f, a.mode, a.trials, seed(g), a.gauss_nodes)?;
    let holds = |b: f64| bound_holds(r.direct, b);
    print(&json!({
        "fn": a.function,
        "n": a.n,
        "u": a.u.to_string(),
        "v": a.v.to_string(),
        "mode": a.mode,
        "gap": r.direct,
        "telescoped": r.total,
        "increments": r.increments,
        "bound_thm1": r.bound_thm1,
        "bound_thm2": r.bound_thm2,
        "satisfied": holds(r.bound_thm2) && r.bound_thm1.is_none_or(holds),
    }));
    Ok(())
}

// --------------------------------------------------------------------- cdma

#[derive(Args, Clone)]
pub struct CdmaFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub ens_a: Option<EnsembleSpec>,
    #[arg(long)]
    pub ens_b: Option<EnsembleSpec>,
    /// Matrix trials.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub noise_trials: Option<usize>,
}

impl CdmaFlags {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("n", opt(&self.n)),
            ("alpha", opt(&self.alpha)),
            ("sigma", opt(&self.sigma)),
            ("ensemble_a", opt(&self.ens_a)),
            ("ensemble_b", opt(&self.ens_b)),
            ("trials", opt(&self.trials)),
            ("noise_trials", opt(&self.noise_trials)),
        ]
    }
}

#[derive(Subcommand)]
pub enum CdmaCmd {
    /// Capacity per user averaged over matrices of one ensemble.
    Capacity(CdmaFlags),
    /// Paired capacities of two ensembles.
    Universality(CdmaFlags),
    /// Paired capacities of sparsified matrices against the dense baseline.
    SparseDense {
        #[command(flatten)]
        flags: CdmaFlags,
        /// Comma-separated sparsity levels, each at most n.
        #[arg(long)]
        gammas: Option<String>,
        /// Dense divisor: n or m.
        #[arg(long)]
        dense_scale: Option<String>,
    },
}

pub fn cdma(cmd: &CdmaCmd, g: &Global) -> Result<()> {
    match cmd {
        CdmaCmd::Capacity(f) => {
            let cfg = comparison_config(ExperimentKind::CdmaUniversality, g, &f.pairs())?;
            let ch = CdmaChannel::new(cfg.n, cfg.alpha, cfg.sigma)?;
            let mut caps = Vec::with_capacity(cfg.trials);
            for t in 0..cfg.trials {
                let s = derive_seed(cfg.seed, &["cdma.capacity"], t as u64);
                let a = sample_standard(&cfg.ensemble_a, ch.m, ch.n, derive_seed(s, &["matrix"], 0))?.with_scale(Scale::SqrtRows)?;
                caps.push(cdma::capacity_exact(&a, &ch, cfg.noise_trials, derive_seed(s, &["noise"], 0))?.mean);
            }
            let k = caps.len() as f64;
            let mean = caps.iter().sum::<f64>() / k;
            let var = caps.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            print(&json!({
                "ensemble": cfg.ensemble_a.to_string(),
                "n": ch.n,
                "m": ch.m,
                "sigma": ch.sigma,
                "matrix_trials": cfg.trials,
                "noise_trials": cfg.noise_trials,
                "capacity": mean,
                "std_error": (var / k).sqrt(),
            }));
            Ok(())
        }
        CdmaCmd::Universality(f) => run_and_write(&comparison_config(ExperimentKind::CdmaUniversality, g, &f.pairs())?),
        CdmaCmd::SparseDense { flags, gammas, dense_scale } => {
            let mut pairs = flags.pairs();
            pairs.push(("gammas", gammas.clone()));
            pairs.push(("dense_scale", dense_scale.clone()));
            run_and_write(&comparison_config(ExperimentKind::CdmaSparseDense, g, &pairs)?)
        }
    }
}

// ------------------------------------------------------------------ replica

#[derive(Args)]
pub struct ReplicaModel {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Gauss–Hermite nodes.
    #[arg(long, default_value_t = replica::DEFAULT_NODES)]
    pub nodes: usize,
}

#[derive(Subcommand)]
pub enum ReplicaCmd {
    /// C_RS(q) at one point.
    Eval {
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        model: ReplicaModel,
    },
    /// Global minimum over q in [0, 1] with all local minima.
    Minimize {
        #[command(flatten)]
        model: ReplicaModel,
        #[arg(long, default_value_t = replica::DEFAULT_GRID)]
        grid: usize,
    },
    /// Largest alpha with a unique minimizer for every noise level of the grid.
    AlphaS {
        #[arg(long, default_value_t = 1.0)]
        lo: f64,
        #[arg(long, default_value_t = 2.0)]
        hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Log-spaced noise levels in [1e-2, 1e2].
        #[arg(long, default_value_t = replica::DEFAULT_SIGMA2_POINTS)]
        sigma2_points: usize,
        #[arg(long, default_value_t = replica::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = replica::DEFAULT_NODES)]
        nodes: usize,
    },
}

pub fn replica(cmd: &ReplicaCmd, _g: &Global) -> Result<()> {
    match cmd {
        ReplicaCmd::Eval { q, model } => {
            let quad = QuadratureSpec::new(model.nodes)?;
            let p = replica::crs(*q, model.alpha, model.sigma2, &quad)?;
            print(&json!({
                "q": p.q,
                "alpha": p.alpha,
                "sigma2": p.sigma2,
                "lambda": p.lambda,
                "value": p.value,
                "value_plus_log2": p.calibrated(Calibration::PlusLog2),
            }));
        }
        ReplicaCmd::Minimize { model, grid } => {
            let quad = QuadratureSpec::new(model.nodes)?;
            let m = replica::minimize_crs(model.alpha, model.sigma2, *grid, replica::DEFAULT_REFINE_TOL, &quad)?;
            print(&json!({
                "alpha": m.alpha,
                "sigma2": m.sigma2,
                "q_star": m.q_star,
                "value": m.value,
                "value_plus_log2": m.calibrated(Calibration::PlusLog2),
                "unique": m.is_unique(),
                "local_minima": m.all_local_minima,
            }));
        }
        ReplicaCmd::AlphaS { lo, hi, tol, sigma2_points, grid, nodes } => {
            let start = Instant::now();
            let s2 = replica::log_grid(1e-2, 1e2, *sigma2_points)?;
            let quad = QuadratureSpec::new(*nodes)?;
            let a = replica::find_alpha_s_with(&s2, *lo, *hi, *tol, *grid, &quad)?;
            print(&json!({
                "alpha_s": a,
                "tol": tol,
                "sigma2_points": sigma2_points,
                "grid": grid,
                "seconds": start.elapsed().as_secs_f64(),
            }));
        }
    }
    Ok(())
}

// -------------------------------------------------------------------- lasso

#[derive(Args, Clone)]
pub struct LassoFlags {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// l1 weight.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, default_value_t = 2.0)]
    pub x_max: f64,
    #[arg(long, default_value = "gaussian")]
    pub ens: EnsembleSpec,
}

impl LassoFlags {
    fn experiment(&self, seed: u64) -> LassoExperiment {
        LassoExperiment {
            n: self.n,
            alpha: self.alpha,
            sigma: self.sigma,
            reg_weight: self.lambda,
            rho: self.rho,
            x_max: self.x_max,
            trials: 1,
            seed,
            workers: None,
        }
    }

    fn problem(&self, g: &Global) -> Result<lasso::LassoProblem> {
        let s = seed(g);
        Ok(lasso::trial_problem(&self.ens, &self.experiment(s), derive_seed(s, &["lasso.instance"], 0))?)
    }
}

#[derive(Subcommand)]
pub enum LassoCmd {
    /// Solves one instance by coordinate descent.
    Solve(LassoFlags),
    /// Continuous and grid-restricted costs of one instance.
    Cost {
        #[command(flatten)]
        flags: LassoFlags,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// exact or descent
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Grid sandwich and finite-temperature checks on one small instance.
    GridGap {
        #[command(flatten)]
        flags: LassoFlags,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Comma-separated inverse temperatures.
        #[arg(long, default_value = "0.5,1,2,4,8")]
        betas: String,
    },
    /// Paired normalized costs of two ensembles.
    Universality {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long)]
        ens_a: Option<EnsembleSpec>,
        #[arg(long)]
        ens_b: Option<EnsembleSpec>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Invalid(format!("bad {name} entry `{v}`")).into()))
        .collect()
}

pub fn lasso(cmd: &LassoCmd, g: &Global) -> Result<()> {
    match cmd {
        LassoCmd::Solve(f) => {
            let p = f.problem(g)?;
            let s = lasso::solve_box_lasso(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            print(&json!({
                "n": p.n(),
                "cost": s.cost,
                "normalized_cost": s.cost / p.n() as f64,
                "iterations": s.iterations,
                "converged": s.converged,
                "kkt_residual": s.kkt_residual,
                "x_hat": s.x_hat,
            }));
        }
        LassoCmd::Cost { flags, delta, mode } => {
            let mode = match mode.as_str() {
                "exact" => GridMode::Exact,
                "descent" => GridMode::Descent,
                other => return Err(Invalid(format!("unknown grid mode `{other}` (exact, descent)")).into()),
            };
            let p = flags.problem(g)?;
            let grid = GridSpec::new(*delta, flags.x_max)?;
            let (l, converged) = lasso::normalized_cost(&p, DEFAULT_TOL)?;
            let l_delta = lasso::grid_cost(&p, &grid, mode)?;
            print(&json!({
                "n": p.n(),
                "cost": l,
                "converged": converged,
                "grid_cost": l_delta,
                "delta": delta,
                "grid_points": grid.len(),
                "gap_bound": lasso::grid_gap_bound(&p, *delta)?.total(),
            }));
        }
        LassoCmd::GridGap { flags, delta, betas } => {
            let p = flags.problem(g)?;
            let grid = GridSpec::new(*delta, flags.x_max)?;
            let (l, _) = lasso::normalized_cost(&p, DEFAULT_TOL)?;
            let l_delta = lasso::grid_cost(&p, &grid, GridMode::Exact)?;
            let bound = lasso::grid_gap_bound(&p, *delta)?;
            let log_x = (grid.len() as f64).ln();
            let mut rows = Vec::new();
            for beta in parse_list("betas", betas)? {
                let (fb, entropy) = lasso::finite_temp_with_entropy(&p, &grid, beta)?;
                let gap = l_delta - fb;
                rows.push(json!({
                    "beta": beta,
                    "free_energy": fb,
                    "entropy": entropy,
                    "gap": gap,
                    "upper": log_x / beta,
                    "holds": gap >= -1e-12 && gap <= log_x / beta + 1e-12,
                }));
            }
            print(&json!({
                "n": p.n(),
                "cost": l,
                "grid_cost": l_delta,
                "bound": {"reg": bound.reg_term, "noise": bound.noise_term, "spectral": bound.spectral_term, "total": bound.total()},
                "sandwich_holds": l <= l_delta + 1e-12 && l_delta <= l + bound.total() + 1e-12,
                "temperatures": rows,
            }));
        }
        LassoCmd::Universality { n, alpha, sigma, lambda, rho, x_max, ens_a, ens_b, trials } => {
            let pairs = [
                ("n", opt(n)),
                ("alpha", opt(alpha)),
                ("sigma", opt(sigma)),
                ("reg_weight", opt(lambda)),
                ("rho", opt(rho)),
                ("x_max", opt(x_max)),
                ("ensemble_a", opt(ens_a)),
                ("ensemble_b", opt(ens_b)),
                ("trials", opt(trials)),
            ];
            run_and_write(&comparison_config(ExperimentKind::LassoUniversality, g, &pairs)?)?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ spectra

/// `re,im`.
fn parse_z(s: &str) -> Result<Complex64> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| Invalid(format!("--z expects `re,im`, got `{s}`")))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|_| Invalid(format!("bad number `{v}` in --z")));
    Ok(Complex64::new(p(re)?, p(im)?))
}

#[derive(Args, Clone)]
pub struct SpectraFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Evaluation point `re,im`; repeat for several.
    #[arg(long)]
    pub z: Vec<String>,
    #[arg(long)]
    pub gammas: Option<String>,
    #[arg(long)]
    pub ens: Option<EnsembleSpec>,
    #[arg(long)]
    pub trials: Option<usize>,
}

impl SpectraFlags {
    fn config(&self, g: &Global) -> Result<ExperimentConfig> {
        let z = if self.z.is_empty() {
            None
        } else {
            let pts: Vec<String> = self
                .z
                .iter()
                .map(|s| parse_z(s).map(|z| format!("{}:{}", z.re, z.im)))
                .collect::<Result<_>>()?;
            Some(pts.join(","))
        };
        let pairs = [
            ("n", opt(&self.n)),
            ("alpha", opt(&self.alpha)),
            ("sigma", opt(&self.sigma)),
            ("z", z),
            ("gammas", self.gammas.clone()),
            ("ensemble_a", opt(&self.ens)),
            ("trials", opt(&self.trials)),
        ];
        comparison_config(ExperimentKind::SpectraSparseDense, g, &pairs)
    }

    fn wishart(&self, g: &Global) -> Result<WishartConfig> {
        let c = self.config(g)?;
        Ok(WishartConfig {
            spec: c.ensemble_a,
            gammas: c.gammas,
            n: c.n,
            alpha: c.alpha,
            z_list: c.z,
            sigma: c.sigma,
            trials: c.trials,
            seed: c.seed,
            workers: c.workers,
        })
    }
}

#[derive(Subcommand)]
pub enum SpectraCmd {
    /// Dense Wishart Stieltjes transform against the Marchenko–Pastur form.
    Stieltjes(SpectraFlags),
    /// Tabulates a reference density as `x,density` CSV.
    Densities {
        /// semicircle, kesten-mckay or marchenko-pastur
        #[arg(long, default_value = "semicircle")]
        law: String,
        /// Degree for the Kesten–McKay law.
        #[arg(long, default_value_t = 3)]
        d: u32,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Sparse-dense MIMO capacity gaps and the trace moment check.
    Mimo(SpectraFlags),
    /// Sparse-dense Stieltjes gaps.
    SparseDense(SpectraFlags),
}

pub fn spectra(cmd: &SpectraCmd, g: &Global) -> Result<()> {
    match cmd {
        SpectraCmd::Stieltjes(f) => {
            let w = f.wishart(g)?;
            let m = w.m();
            let mut sums = vec![Complex64::new(0.0, 0.0); w.z_list.len()];
            for t in 0..w.trials {
                let b = sample_standard(&w.spec, m, w.n, derive_seed(w.seed, &["spectra.stieltjes"], t as u64))?;
                let s = spectra::gram_spectrum(&b.raw(), 1.0 / w.n as f64)?;
                for (acc, &z) in sums.iter_mut().zip(&w.z_list) {
                    *acc += spectra::stieltjes(&s, z)?;
                }
            }
            let alpha = m as f64 / w.n as f64;
            let rows: Vec<Value> = w
                .z_list
                .iter()
                .zip(&sums)
                .map(|(&z, s)| {
                    let emp = s / w.trials as f64;
                    let mp = spectra::marchenko_pastur_stieltjes(z, alpha)?;
                    Ok(json!({"z": [z.re, z.im], "empirical": [emp.re, emp.im], "closed_form": [mp.re, mp.im], "abs_err": (emp - mp).norm()}))
                })
                .collect::<Result<_>>()?;
            print(&json!({"n": w.n, "m": m, "trials": w.trials, "points": rows}));
        }
        SpectraCmd::Densities { law, d, alpha, points } => {
            if *points < 2 {
                return Err(Invalid("--points must be at least 2".into()).into());
            }
            let (lo, hi) = match law.as_str() {
                "semicircle" => (-2.0, 2.0),
                "kesten-mckay" => {
                    let e = spectra::kesten_mckay_edge(*d)?;
                    (-e, e)
                }
                "marchenko-pastur" => spectra::marchenko_pastur_edges(*alpha),
                other => return Err(Invalid(format!("unknown law `{other}`")).into()),
            };
            emit("x,density");
            for k in 0..*points {
                let x = lo + (hi - lo) * k as f64 / (*points - 1) as f64;
                let rho = match law.as_str() {
                    "semicircle" => spectra::semicircle_density(x),
                    "kesten-mckay" => spectra::kesten_mckay_density(x, *d)?,
                    _ => spectra::marchenko_pastur_density(x, *alpha)?,
                };
                emit(&format!("{x},{rho}"));
            }
        }
        SpectraCmd::Mimo(f) => {
            let (gaps, moments) = spectra::mimo_sparse_dense_experiment(&f.wishart(g)?)?;
            let rows: Vec<Value> = gaps
                .iter()
                .zip(&moments)
                .map(|(gap, tm)| {
                    json!({
                        "gamma": gap.gamma,
                        "diff": gap.result.estimate,
                        "ci": [gap.result.ci_lo, gap.result.ci_hi],
                        "trace_moment": tm.empirical_mean,
                        "trace_moment_expected": tm.analytic,
                    })
                })
                .collect();
            print(&json!({"mimo": rows}));
        }
        SpectraCmd::SparseDense(f) => run_and_write(&f.config(g)?)?,
    }
    Ok(())
}

// ----------------------------------------------------------------------- sk

#[derive(Args, Clone)]
pub struct SkFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub ens_a: Option<EnsembleSpec>,
    #[arg(long)]
    pub ens_b: Option<EnsembleSpec>,
    #[arg(long)]
    pub trials: Option<usize>,
}

impl SkFlags {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("n", opt(&self.n)),
            ("beta", opt(&self.beta)),
            ("ensemble_a", opt(&self.ens_a)),
            ("ensemble_b", opt(&self.ens_b)),
            ("trials", opt(&self.trials)),
        ]
    }
}

#[derive(Subcommand)]
pub enum SkCmd {
    /// Free entropy of one sampled instance.
    FreeEntropy(SkFlags),
    /// Paired free entropies of two ensembles.
    Universality(SkFlags),
    /// Paired free entropies of sparsified couplings against the dense ones.
    SparseDense {
        #[command(flatten)]
        flags: SkFlags,
        #[arg(long)]
        gammas: Option<String>,
    },
}

pub fn sk(cmd: &SkCmd, g: &Global) -> Result<()> {
    match cmd {
        SkCmd::FreeEntropy(f) => {
            let cfg = comparison_config(ExperimentKind::SkUniversality, g, &f.pairs())?;
            let a = sample_standard(&cfg.ensemble_a, cfg.n, cfg.n, derive_seed(cfg.seed, &["sk.free-entropy"], 0))?
                .with_scale(Scale::SqrtCols)?;
            let inst = sk::SkInstance::new(a, cfg.beta)?;
            let (lo, hi) = sk::energy_range(&inst.a.scaled())?;
            print(&json!({
                "ensemble": cfg.ensemble_a.to_string(),
                "n": cfg.n,
                "beta": cfg.beta,
                "free_entropy": sk::free_entropy(&inst)?,
                "energy_range": [lo, hi],
            }));
            Ok(())
        }
        SkCmd::Universality(f) => run_and_write(&comparison_config(ExperimentKind::SkUniversality, g, &f.pairs())?),
        SkCmd::SparseDense { flags, gammas } => {
            let mut pairs = flags.pairs();
            pairs.push(("gammas", gammas.clone()));
            run_and_write(&comparison_config(ExperimentKind::SkSparseDense, g, &pairs)?)
        }
    }
}
