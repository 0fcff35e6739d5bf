//! Streaming log-sum-exp accumulators for partition functions.

/// Running `log Σ exp(a_k)` with a shifting reference maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, a: f64) {
        if a <= self.max {
            self.sum += (a - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - a).exp() + 1.0;
            self.max = a;
        }
    }

    /// Returns `-inf` for an empty accumulator.
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Log-sum-exp over a slice.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Accumulates `Σ exp(a_k)` together with `Σ g_j(x_k) exp(a_k)` for several
/// functionals, all relative to the same running maximum. Ratios give Gibbs
/// averages without overflow.
#[derive(Debug, Clone)]
pub struct WeightedLogSumExp {
    max: f64,
    norm: f64,
    sums: Vec<f64>,
}

impl WeightedLogSumExp {
    pub fn new(k: usize) -> Self {
        Self {
            max: f64::NEG_INFINITY,
            norm: 0.0,
            sums: vec![0.0; k],
        }
    }

    #[inline]
    pub fn push(&mut self, a: f64, g: &[f64]) {
        debug_assert_eq!(g.len(), self.sums.len());
        let w = if a <= self.max {
            (a - self.max).exp()
        } else {
            let r = (self.max - a).exp();
            self.norm *= r;
            for s in &mut self.sums {
                *s *= r;
            }
            self.max = a;
            1.0
        };
        self.norm += w;
        for (s, &gj) in self.sums.iter_mut().zip(g) {
            *s += w * gj;
        }
    }

    pub fn log_norm(&self) -> f64 {
        if self.norm == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.norm.ln()
        }
    }

    /// Weighted averages `Σ g_j e^a / Σ e^a`.
    pub fn averages(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.norm).collect()
    }
}
