//! Gauss rules for expectations under N(0,1) and integrals over finite intervals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of a fixed interpolatory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Hermite rule for the standard normal weight, so that
/// `rule.integrate(g)` approximates `E g(Z)` with `Z ~ N(0,1)`.
///
/// Roots of the orthonormal physicists' Hermite polynomials are located by
/// Newton iteration from asymptotic initial guesses, then mapped by `x = √2 t`.
/// The recurrence runs on Hermite functions `e^{−t²/2} p_j(t)` so that large
/// rules do not overflow.
pub fn gauss_hermite(n: usize) -> Result<Rule> {
    if n == 0 {
        return Err(Error::param("node_count", "must be positive"));
    }
    const MAX_IT: usize = 100;
    let pim4 = PI.powf(-0.25);
    let mut t = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * t[0],
            3 => 1.91 * z - 0.91 * t[1],
            _ => 2.0 * z - t[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..MAX_IT {
            let mut p1 = pim4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "Gauss-Hermite root",
                iterations: MAX_IT,
            });
        }
        t[i] = z;
        t[n - 1 - i] = -z;
        // pp carries the factor e^{−t²/2}; undo it in the weight
        w[i] = 2.0 * (-z * z).exp() / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = PI.sqrt();
    let mut nodes: Vec<f64> = t.iter().map(|&x| x * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|&x| x / sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    // The asymptotic initial guesses stop separating roots for large n.
    let distinct = nodes.windows(2).all(|p| p[1] > p[0]);
    let mass: f64 = weights.iter().sum();
    let second: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
    if !distinct || (mass - 1.0).abs() > 1e-12 || (second - 1.0).abs() > 1e-10 {
        return Err(Error::NoConvergence { what: "Gauss-Hermite rule", iterations: MAX_IT });
    }
    Ok(Rule { nodes, weights })
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    if n == 0 {
        return Err(Error::param("node_count", "must be positive"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Ok(Rule { nodes, weights })
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<Rule> {
    let base = gauss_legendre(n)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(Rule {
        nodes: base.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: base.weights.iter().map(|&w| half * w).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial_odd(k: u32) -> f64 {
        (1..=k).filter(|j| j % 2 == 1).map(|j| j as f64).product()
    }

    #[test]
    fn hermite_reproduces_gaussian_moments() {
        for &n in &[8usize, 32, 64, 128] {
            let rule = gauss_hermite(n).unwrap();
            assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-12, "n={n}");
            assert!((rule.integrate(|z| z * z) - 1.0).abs() < 1e-10, "n={n}");
            let max_k = (2 * n - 1).min(16) as u32;
            for k in (2..=max_k).step_by(2) {
                let exact = double_factorial_odd(k - 1);
                let got = rule.integrate(|z| z.powi(k as i32));
                assert!((got - exact).abs() <= 1e-9 * exact, "n={n} k={k}: {got} vs {exact}");
            }
            assert!(rule.integrate(|z| z.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_nodes_sorted_and_symmetric() {
        let rule = gauss_hermite(64).unwrap();
        for w in rule.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..64 {
            assert!((rule.nodes[i] + rule.nodes[63 - i]).abs() < 1e-12);
        }
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn hermite_matches_closed_form_expectation() {
        // E cos(Z) = exp(-1/2)
        let rule = gauss_hermite(64).unwrap();
        assert!((rule.integrate(f64::cos) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        let rule = gauss_legendre(16).unwrap();
        for k in 0..=31 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = rule.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-13, "k={k}");
        }
        let r = gauss_legendre_on(16, 0.0, 2.0).unwrap();
        assert!((r.integrate(|x| x.exp()) - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_legendre(0).is_err());
    }
}
