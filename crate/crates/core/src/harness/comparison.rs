//! Paired Monte Carlo comparisons with common random numbers.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_mean_ci, mean, std_dev, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use super::seed::derive_seed;
use crate::error::{Error, Result};

/// One paired trial: both sides evaluated on shared auxiliary randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub label: String,
    pub trials: Vec<TrialRecord>,
    pub failures: usize,
    /// Mean of `a − b`.
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub resamples: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub std_error: f64,
    pub master_seed: u64,
    /// Free-form experiment parameters, e.g. `("n", "10")`.
    pub params: Vec<(String, String)>,
    pub wall_time_s: f64,
}

impl ComparisonResult {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }

    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci_lo <= x && x <= self.ci_hi
    }

    pub fn diffs(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.diff).collect()
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Per-trial CSV rows (`label,index,seed,a,b,diff`), no header.
    pub fn write_trial_rows(&self, out: &mut String) {
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.label, t.index, t.seed, t.a, t.b, t.diff
            );
        }
    }

    /// Assembles a result from already-computed pairs.
    pub fn from_pairs(
        label: &str,
        master_seed: u64,
        records: Vec<TrialRecord>,
        failures: usize,
        wall_time_s: f64,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::param("trials", "no successful trials"));
        }
        let diffs: Vec<f64> = records.iter().map(|t| t.diff).collect();
        let a: Vec<f64> = records.iter().map(|t| t.a).collect();
        let b: Vec<f64> = records.iter().map(|t| t.b).collect();
        let boot_seed = derive_seed(master_seed, &[label, "bootstrap"], 0);
        let ci = bootstrap_mean_ci(&diffs, DEFAULT_RESAMPLES, DEFAULT_LEVEL, boot_seed)?;
        Ok(Self {
            label: label.to_string(),
            failures,
            estimate: mean(&diffs),
            ci_lo: ci.lo,
            ci_hi: ci.hi,
            level: DEFAULT_LEVEL,
            resamples: DEFAULT_RESAMPLES,
            mean_a: mean(&a),
            mean_b: mean(&b),
            std_error: std_dev(&diffs) / (diffs.len() as f64).sqrt(),
            master_seed,
            params: Vec::new(),
            wall_time_s,
            trials: records,
        })
    }
}

pub const CSV_HEADER: &str = "label,index,seed,a,b,diff";

/// Runs `trials` paired evaluations. `eval(index, seed)` returns the two
/// sides computed from shared randomness derived from `seed`. Results are
/// merged in index order, so the output does not depend on scheduling.
/// More than 1% failed trials aborts.
pub fn run_paired<F>(
    label: &str,
    master_seed: u64,
    trials: usize,
    workers: Option<usize>,
    eval: F,
) -> Result<ComparisonResult>
where
    F: Fn(usize, u64) -> Result<(f64, f64)> + Sync,
{
    let labels = [label.to_string()];
    let mut out = run_paired_multi(label, &labels, master_seed, trials, workers, |i, s| {
        eval(i, s).map(|p| vec![p])
    })?;
    Ok(out.remove(0))
}

/// Like [`run_paired`], but each trial yields one pair per entry of
/// `outputs`, all computed from the same per-trial seed.
/// Trial index, trial seed and the paired values it produced.
type TrialOutcome = (usize, u64, Result<Vec<(f64, f64)>>);

pub fn run_paired_multi<F>(
    label: &str,
    outputs: &[String],
    master_seed: u64,
    trials: usize,
    workers: Option<usize>,
    eval: F,
) -> Result<Vec<ComparisonResult>>
where
    F: Fn(usize, u64) -> Result<Vec<(f64, f64)>> + Sync,
{
    if trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    let k = outputs.len();
    let start = Instant::now();
    let body = || -> Vec<TrialOutcome> {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(master_seed, &[label], i as u64);
                (i, seed, eval(i, seed))
            })
            .collect()
    };
    let outcomes = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::param("workers", e))?
            .install(body),
        None => body(),
    };
    let mut records: Vec<Vec<TrialRecord>> = vec![Vec::with_capacity(trials); k];
    let mut failures = 0;
    let mut first_error = None;
    for (index, seed, outcome) in outcomes {
        let checked = outcome.and_then(|pairs| {
            if pairs.len() != k {
                Err(Error::dim(format!("trial returned {} pairs, expected {k}", pairs.len())))
            } else if pairs.iter().all(|(a, b)| a.is_finite() && b.is_finite()) {
                Ok(pairs)
            } else {
                Err(Error::non_finite(format!("trial {index}")))
            }
        });
        match checked {
            Ok(pairs) => {
                for (slot, (a, b)) in records.iter_mut().zip(pairs) {
                    slot.push(TrialRecord {
                        index,
                        seed,
                        a,
                        b,
                        diff: a - b,
                    });
                }
            }
            Err(e) => {
                failures += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failures * 100 > trials {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: trials,
            first: first_error.unwrap_or_default(),
        });
    }
    let wall = start.elapsed().as_secs_f64();
    outputs
        .iter()
        .zip(records)
        .map(|(name, recs)| ComparisonResult::from_pairs(name, master_seed, recs, failures, wall))
        .collect()
}
