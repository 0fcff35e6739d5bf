//! Reference spectral laws: semicircle, Kesten–McKay and Marchenko–Pastur.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre_on;

const CDF_NODES: usize = 64;

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

fn check_degree(d: u32) -> Result<()> {
    if d < 2 {
        Err(Error::param("d", format!("degree {d} must be at least 2")))
    } else {
        Ok(())
    }
}

/// Right endpoint `2√(1 − 1/d)` of the Kesten–McKay support.
pub fn kesten_mckay_edge(d: u32) -> Result<f64> {
    check_degree(d)?;
    Ok(2.0 * (1.0 - 1.0 / d as f64).sqrt())
}

pub fn kesten_mckay_density(x: f64, d: u32) -> Result<f64> {
    let edge = kesten_mckay_edge(d)?;
    if x.abs() >= edge {
        return Ok(0.0);
    }
    let df = d as f64;
    Ok((4.0 * (1.0 - 1.0 / df) - x * x).sqrt() / (2.0 * PI * (1.0 - x * x / df)))
}

/// Distribution function, integrated in the angle `x = R sin θ` where the
/// integrand is smooth.
pub fn kesten_mckay_cdf(x: f64, d: u32) -> Result<f64> {
    let r = kesten_mckay_edge(d)?;
    if x <= -r {
        return Ok(0.0);
    }
    if x >= r {
        return Ok(1.0);
    }
    let r2 = 4.0 * (1.0 - 1.0 / d as f64);
    let k = r2 / d as f64;
    let theta = (x / r).asin();
    let rule = gauss_legendre_on(CDF_NODES, -PI / 2.0, theta)?;
    Ok(rule.integrate(|t| {
        let c = t.cos();
        let s = t.sin();
        r2 * c * c / (2.0 * PI * (1.0 - k * s * s))
    }))
}

/// Edges `((√α − 1)², (√α + 1)²)` for `W = (1/n)AᵀA` with `A` of size
/// `m × n` and `α = m/n`.
pub fn marchenko_pastur_edges(alpha: f64) -> (f64, f64) {
    let s = alpha.sqrt();
    ((s - 1.0).powi(2), (s + 1.0).powi(2))
}

/// Point mass at zero, `(1 − α)₊`.
pub fn marchenko_pastur_atom(alpha: f64) -> f64 {
    (1.0 - alpha).max(0.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} must be positive")))
    }
}

/// Density of the absolutely continuous part.
pub fn marchenko_pastur_density(x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (a, b) = marchenko_pastur_edges(alpha);
    if x <= a || x >= b || x <= 0.0 {
        return Ok(0.0);
    }
    Ok(((b - x) * (x - a)).sqrt() / (2.0 * PI * x))
}

/// Distribution function including the atom.
pub fn marchenko_pastur_cdf(x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (a, b) = marchenko_pastur_edges(alpha);
    let atom = marchenko_pastur_atom(alpha);
    if x < 0.0 {
        return Ok(0.0);
    }
    if x <= a {
        return Ok(atom);
    }
    if x >= b {
        return Ok(1.0);
    }
    // x = a + (b − a)(1 − cos φ)/2 removes the square-root edges.
    let h = 0.5 * (b - a);
    let phi = (1.0 - (x - a) / h).clamp(-1.0, 1.0).acos();
    let rule = gauss_legendre_on(CDF_NODES, 0.0, phi)?;
    let cont = rule.integrate(|p| {
        let s = p.sin();
        let xp = a + h * (1.0 - p.cos());
        h * h * s * s / (2.0 * PI * xp)
    });
    Ok(atom + cont)
}

/// Limit of `(1/n) tr (W + zI)⁻¹`.
///
/// With `G(w) = ∫ ρ(dx)/(w − x)` solving `w G² − (w + 1 − α) G + 1 = 0`, the
/// plus-sign transform is `−G(−z)`. The root is the one with
/// `Im G · Im w < 0`.
pub fn marchenko_pastur_stieltjes(z: Complex64, alpha: f64) -> Result<Complex64> {
    check_alpha(alpha)?;
    if z.im == 0.0 {
        return Err(Error::param("z", "imaginary part must be nonzero"));
    }
    let w = -z;
    let b = w + 1.0 - alpha;
    let disc = (b * b - 4.0 * w).sqrt();
    let roots = [(b + disc) / (2.0 * w), (b - disc) / (2.0 * w)];
    let herglotz: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|g| g.im * w.im < 0.0)
        .collect();
    let g = match herglotz.as_slice() {
        [g] => *g,
        _ => {
            return Err(Error::non_finite(format!(
                "no unique Herglotz branch at z = {z} (candidates {roots:?})"
            )))
        }
    };
    Ok(-g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::gauss_legendre_on;

    #[test]
    fn semicircle_values() {
        assert!((semicircle_density(0.0) - 1.0 / PI).abs() < 1e-16);
        assert_eq!(semicircle_density(2.0), 0.0);
        assert_eq!(semicircle_density(-3.0), 0.0);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((semicircle_cdf(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kesten_mckay_support_edges() {
        for d in [2u32, 3, 10] {
            let e = kesten_mckay_edge(d).unwrap();
            assert_eq!(e, 2.0 * (1.0 - 1.0 / d as f64).sqrt());
            assert_eq!(kesten_mckay_density(e, d).unwrap(), 0.0);
            assert!(kesten_mckay_density(0.999 * e, d).unwrap() > 0.0);
        }
        assert!(kesten_mckay_edge(1).is_err());
    }

    #[test]
    fn kesten_mckay_cdf_is_normalized_and_matches_density() {
        for d in [2u32, 3, 7, 50] {
            assert!((kesten_mckay_cdf(10.0, d).unwrap() - 1.0).abs() < 1e-15);
            let e = kesten_mckay_edge(d).unwrap();
            let full = kesten_mckay_cdf(e * (1.0 - 1e-15), d).unwrap();
            assert!((full - 1.0).abs() < 1e-6, "d={d}: {full}");
            assert!((kesten_mckay_cdf(0.0, d).unwrap() - 0.5).abs() < 1e-12);
            // derivative of the CDF equals the density at interior points
            let x = 0.37 * e;
            let h = 1e-5;
            let deriv = (kesten_mckay_cdf(x + h, d).unwrap() - kesten_mckay_cdf(x - h, d).unwrap()) / (2.0 * h);
            assert!((deriv - kesten_mckay_density(x, d).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn kesten_mckay_d2_is_arcsine() {
        let x: f64 = 0.6;
        let r = 2f64.sqrt();
        let arcsine = 0.5 + (x / r).asin() / PI;
        assert!((kesten_mckay_cdf(x, 2).unwrap() - arcsine).abs() < 1e-13);
    }

    #[test]
    fn kesten_mckay_approaches_semicircle_in_distribution() {
        let grid: Vec<f64> = (0..401).map(|k| -2.0 + 4.0 * k as f64 / 400.0).collect();
        let mut prev = f64::INFINITY;
        for d in [10u32, 100, 1000] {
            let dist = grid
                .iter()
                .map(|&x| (kesten_mckay_cdf(x, d).unwrap() - semicircle_cdf(x)).abs())
                .fold(0.0, f64::max);
            assert!(dist < prev);
            prev = dist;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn mp_density_integrates_to_continuous_mass() {
        for alpha in [0.5, 1.0, 2.0, 4.0] {
            let (a, b) = marchenko_pastur_edges(alpha);
            assert!((marchenko_pastur_cdf(b, alpha).unwrap() - 1.0).abs() < 1e-15);
            let just_below = marchenko_pastur_cdf(b * (1.0 - 1e-14), alpha).unwrap();
            assert!((just_below - 1.0).abs() < 1e-6, "alpha={alpha}: {just_below}");
            if alpha > 1.0 {
                // the density itself is smooth enough for direct quadrature away from 0
                let rule = gauss_legendre_on(2000, a, b).unwrap();
                let mass = rule.integrate(|x| marchenko_pastur_density(x, alpha).unwrap());
                assert!((mass - 1.0).abs() < 1e-5, "alpha={alpha}: {mass}");
            }
        }
        assert!((marchenko_pastur_atom(0.25) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mp_alpha_one_closed_form() {
        for x in [0.1f64, 1.0, 2.5, 3.9] {
            let expected = (x * (4.0 - x)).sqrt() / (2.0 * PI * x);
            assert!((marchenko_pastur_density(x, 1.0).unwrap() - expected).abs() < 1e-15);
        }
        assert_eq!(marchenko_pastur_edges(1.0), (0.0, 4.0));
    }

    #[test]
    fn mp_stieltjes_matches_quadrature_of_density() {
        for alpha in [1.5, 2.0, 3.0] {
            for z in [Complex64::new(1.0, 1.0), Complex64::new(-0.5, 0.7), Complex64::new(2.0, -1.0)] {
                let (a, b) = marchenko_pastur_edges(alpha);
                let h = 0.5 * (b - a);
                let rule = gauss_legendre_on(400, 0.0, PI).unwrap();
                let mut s = Complex64::new(0.0, 0.0);
                for (&p, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = a + h * (1.0 - p.cos());
                    let dens = h * h * p.sin().powi(2) / (2.0 * PI * x);
                    s += w * dens / (z + x);
                }
                let closed = marchenko_pastur_stieltjes(z, alpha).unwrap();
                assert!((closed - s).norm() < 1e-10, "alpha={alpha} z={z}: {closed} vs {s}");
                assert!(closed.im * z.im < 0.0);
            }
        }
    }

    #[test]
    fn mp_stieltjes_includes_the_atom() {
        let alpha = 0.5;
        let z = Complex64::new(0.3, 0.8);
        let (a, b) = marchenko_pastur_edges(alpha);
        let h = 0.5 * (b - a);
        let rule = gauss_legendre_on(400, 0.0, PI).unwrap();
        let mut s = marchenko_pastur_atom(alpha) / z;
        for (&p, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + h * (1.0 - p.cos());
            s += w * (h * h * p.sin().powi(2) / (2.0 * PI * x)) / (z + x);
        }
        assert!((marchenko_pastur_stieltjes(z, alpha).unwrap() - s).norm() < 1e-10);
    }

    #[test]
    fn mp_stieltjes_rejects_real_argument() {
        assert!(marchenko_pastur_stieltjes(Complex64::new(1.0, 0.0), 2.0).is_err());
        assert!(marchenko_pastur_density(1.0, 0.0).is_err());
    }
}
