//! Percentile bootstrap for the mean.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::numerics::rng::seeded;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two points.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Percentile interval for the mean, widened if necessary so it contains the
/// sample mean.
pub fn bootstrap_mean_ci(data: &[f64], resamples: usize, level: f64, seed: u64) -> Result<Interval> {
    if data.is_empty() {
        return Err(Error::param("data", "no observations"));
    }
    if resamples == 0 {
        return Err(Error::param("resamples", "must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("{level} is not in (0, 1)")));
    }
    let n = data.len();
    let mut rng = seeded(seed);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut s = 0.0;
        for _ in 0..n {
            s += data[(rng.next_u64() % n as u64) as usize];
        }
        means.push(s / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    let pick = |q: f64| {
        let pos = q * (resamples - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos - pos.floor());
        let j = (i + 1).min(resamples - 1);
        means[i] + frac * (means[j] - means[i])
    };
    let m = mean(data);
    Ok(Interval {
        lo: pick(tail).min(m),
        hi: pick(1.0 - tail).max(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::standard_normal;

    #[test]
    fn constant_data_gives_degenerate_interval() {
        let ci = bootstrap_mean_ci(&[0.25; 30], 1000, 0.95, 1).unwrap();
        assert_eq!((ci.lo, ci.hi), (0.25, 0.25));
    }

    #[test]
    fn contains_sample_mean() {
        let mut rng = seeded(3);
        let xs: Vec<f64> = (0..15).map(|_| standard_normal(&mut rng).exp()).collect();
        let ci = bootstrap_mean_ci(&xs, 2000, 0.95, 4).unwrap();
        assert!(ci.contains(mean(&xs)));
    }

    #[test]
    fn width_tracks_normal_theory_for_gaussian_data() {
        let mut rng = seeded(8);
        let xs: Vec<f64> = (0..400).map(|_| standard_normal(&mut rng)).collect();
        let ci = bootstrap_mean_ci(&xs, DEFAULT_RESAMPLES, 0.95, 9).unwrap();
        let normal = 1.96 * std_dev(&xs) / 20.0;
        assert!((ci.half_width() / normal - 1.0).abs() < 0.1);
    }

    #[test]
    fn invalid_arguments() {
        assert!(bootstrap_mean_ci(&[], 10, 0.95, 0).is_err());
        assert!(bootstrap_mean_ci(&[1.0], 0, 0.95, 0).is_err());
        assert!(bootstrap_mean_ci(&[1.0], 10, 1.0, 0).is_err());
    }
}
