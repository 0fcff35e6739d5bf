//! Log-log rate fits for convergence schedules.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub difference: f64,
    /// `ln(|difference| + floor)`.
    pub log_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub rows: Vec<SweepRow>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: (f64, f64),
}

/// Least-squares fit of `ln|d|` against `ln x` with a 95% Student-t interval
/// for the slope. Zero differences are lifted by the machine epsilon.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<SweepFit> {
    if points.len() < 3 {
        return Err(Error::param("schedule", "at least three points are required"));
    }
    if points.iter().any(|&(x, d)| !(x > 0.0) || !d.is_finite()) {
        return Err(Error::param("schedule", "abscissae must be positive and differences finite"));
    }
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|&(x, d)| SweepRow {
            x,
            difference: d,
            log_abs: (d.abs() + f64::EPSILON).ln(),
        })
        .collect();
    let k = rows.len() as f64;
    let lx: Vec<f64> = rows.iter().map(|r| r.x.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.log_abs).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("schedule", "abscissae must not all coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = k - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::param("schedule", e))?
        .inverse_cdf(0.975);
    Ok(SweepFit {
        rows,
        slope,
        intercept,
        slope_ci: (slope - t * se, slope + t * se),
    })
}

/// True when each `|d|` is at most `slack` above its predecessor.
pub fn nonincreasing(abs_diffs: &[f64], slack: f64) -> bool {
    abs_diffs.windows(2).all(|w| w[1] <= w[0] + slack)
}
