//! Executes an [`ExperimentConfig`] and writes its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::comparison::{ComparisonResult, CSV_HEADER};
use super::config::{ExperimentConfig, ExperimentKind};
use super::sweep::{fit_rate, nonincreasing, SweepFit};
use crate::cdma::{self, CdmaChannel, CdmaExperiment};
use crate::error::Result;
use crate::lasso::{self, LassoExperiment};
use crate::sk::{self, SkExperiment};
use crate::spectra::{wishart_sweep, WishartConfig};

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.json";
/// Per-`(γ, z)` Stieltjes gaps, written for spectra sweeps only.
pub const GAPS_FILE: &str = "gaps.csv";

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub results: Vec<ComparisonResult>,
    /// `|estimate|` against `γ` for sweeps with at least three levels.
    pub fit: Option<SweepFit>,
    /// `|estimate|` nonincreasing along the sweep, for sweeps.
    pub nonincreasing: Option<bool>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let results = match cfg.experiment {
        ExperimentKind::CdmaUniversality => vec![cdma::universality_experiment(&cfg.ensemble_a, &cfg.ensemble_b, &cdma_exp(cfg)?)?],
        ExperimentKind::CdmaSparseDense => cdma::sparse_dense_experiment(&cfg.ensemble_a, &cfg.gammas, &cdma_exp(cfg)?, cfg.dense_scale)?,
        ExperimentKind::SkUniversality => vec![sk::universality_experiment(&cfg.ensemble_a, &cfg.ensemble_b, &sk_exp(cfg))?],
        ExperimentKind::SkSparseDense => sk::sparse_dense_experiment(&cfg.ensemble_a, &cfg.gammas, &sk_exp(cfg))?,
        ExperimentKind::LassoUniversality => {
            let exp = LassoExperiment {
                n: cfg.n,
                alpha: cfg.alpha,
                sigma: cfg.sigma,
                reg_weight: cfg.reg_weight,
                rho: cfg.rho,
                x_max: cfg.x_max,
                trials: cfg.trials,
                seed: cfg.seed,
                workers: cfg.workers,
            };
            vec![lasso::universality_experiment(&cfg.ensemble_a, &cfg.ensemble_b, &exp)?]
        }
        ExperimentKind::SpectraSparseDense => {
            let sweep = wishart_sweep(&WishartConfig {
                spec: cfg.ensemble_a,
                gammas: cfg.gammas.clone(),
                n: cfg.n,
                alpha: cfg.alpha,
                z_list: cfg.z.clone(),
                sigma: cfg.sigma,
                trials: cfg.trials,
                seed: cfg.seed,
                workers: cfg.workers,
            })?;
            let mut out: Vec<ComparisonResult> = Vec::new();
            for g in sweep.stieltjes {
                out.push(g.re);
                out.push(g.im);
            }
            out.extend(sweep.mimo.into_iter().map(|m| m.result));
            out
        }
    };
    let (fit, mono) = match cfg.experiment {
        ExperimentKind::CdmaSparseDense | ExperimentKind::SkSparseDense => {
            let abs: Vec<f64> = results.iter().map(|r| r.estimate.abs()).collect();
            let fit = (cfg.gammas.len() >= 3)
                .then(|| fit_rate(&cfg.gammas.iter().cloned().zip(abs.iter().cloned()).collect::<Vec<_>>()))
                .transpose()?;
            (fit, Some(nonincreasing(&abs, 0.0)))
        }
        _ => (None, None),
    };
    Ok(RunOutput {
        config: cfg.clone(),
        results,
        fit,
        nonincreasing: mono,
    })
}

fn cdma_exp(cfg: &ExperimentConfig) -> Result<CdmaExperiment> {
    Ok(CdmaExperiment {
        channel: CdmaChannel::new(cfg.n, cfg.alpha, cfg.sigma)?,
        matrix_trials: cfg.trials,
        noise_trials: cfg.noise_trials,
        seed: cfg.seed,
        workers: cfg.workers,
    })
}

fn sk_exp(cfg: &ExperimentConfig) -> SkExperiment {
    SkExperiment {
        n: cfg.n,
        beta: cfg.beta,
        trials: cfg.trials,
        seed: cfg.seed,
        workers: cfg.workers,
    }
}

impl RunOutput {
    /// Header `label,index,seed,a,b,diff`, then every trial of every result.
    pub fn trials_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.results {
            r.write_trial_rows(&mut s);
        }
        s
    }

    pub fn summary(&self) -> Value {
        let results: Vec<Value> = self
            .results
            .iter()
            .map(|r| {
                let params: serde_json::Map<String, Value> =
                    r.params.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
                json!({
                    "label": r.label,
                    "trials": r.trials.len(),
                    "failures": r.failures,
                    "estimate": r.estimate,
                    "ci": [r.ci_lo, r.ci_hi],
                    "half_width": r.half_width(),
                    "level": r.level,
                    "resamples": r.resamples,
                    "mean_a": r.mean_a,
                    "mean_b": r.mean_b,
                    "std_error": r.std_error,
                    "params": params,
                    "wall_time_s": r.wall_time_s,
                })
            })
            .collect();
        json!({
            "experiment": self.config.experiment.id(),
            "master_seed": self.config.seed,
            "config": self.config.to_text(),
            "results": results,
            "fit": self.fit.as_ref().map(|f| json!({"slope": f.slope, "slope_ci": [f.slope_ci.0, f.slope_ci.1]})),
            "nonincreasing": self.nonincreasing,
        })
    }

    /// `gamma,z_re,z_im,part,diff,ci_lo,ci_hi` rows of a spectra sweep.
    pub fn spectra_gaps_csv(&self) -> Option<String> {
        if self.config.experiment != ExperimentKind::SpectraSparseDense {
            return None;
        }
        let mut s = String::from("gamma,z_re,z_im,part,diff,ci_lo,ci_hi\n");
        let mut it = self.results.iter();
        for g in &self.config.gammas {
            for z in &self.config.z {
                for part in ["re", "im"] {
                    let r = it.next()?;
                    s.push_str(&format!("{g},{},{},{part},{},{},{}\n", z.re, z.im, r.estimate, r.ci_lo, r.ci_hi));
                }
            }
        }
        Some(s)
    }

    /// Writes `trials.csv` and `summary.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(TRIALS_FILE);
        let summary = dir.join(SUMMARY_FILE);
        fs::write(&csv, self.trials_csv())?;
        let text = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        fs::write(&summary, text + "\n")?;
        if let Some(gaps) = self.spectra_gaps_csv() {
            fs::write(dir.join(GAPS_FILE), gaps)?;
        }
        Ok((csv, summary))
    }
}
