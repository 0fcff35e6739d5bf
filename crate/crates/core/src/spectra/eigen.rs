//! Symmetric eigenvalues by Householder tridiagonalization followed by
//! implicit QL iterations with Wilkinson-type shifts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const MAX_QL_SWEEPS: usize = 60;

/// Sorted spectrum of a symmetric matrix and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    /// Dimensions of the matrix whose Gram matrix was taken, if any.
    pub source_dims: Option<(usize, usize)>,
    /// Factor the Gram matrix was multiplied by.
    pub scale: f64,
}

impl SpectralSummary {
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Full spectrum of a symmetric matrix.
pub fn eigenvalues_symmetric(w: &Matrix) -> Result<SpectralSummary> {
    let n = w.rows();
    if w.cols() != n {
        return Err(Error::dim(format!("{}x{} matrix is not square", w.rows(), w.cols())));
    }
    let norm = w.frobenius_sq().sqrt();
    let asym = w.max_asymmetry();
    if asym > 1e-12 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if w.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("eigensolver input"));
    }
    let mut eigenvalues = if n == 0 {
        Vec::new()
    } else {
        let (mut d, mut e) = tridiagonalize(w);
        ql_implicit(&mut d, &mut e)?;
        d
    };
    eigenvalues.sort_by(f64::total_cmp);
    Ok(SpectralSummary {
        eigenvalues,
        n,
        source_dims: None,
        scale: 1.0,
    })
}

/// Spectrum of `s · AᵀA`.
pub fn gram_spectrum(a: &Matrix, s: f64) -> Result<SpectralSummary> {
    let mut summary = eigenvalues_symmetric(&a.gram(s))?;
    summary.source_dims = Some((a.rows(), a.cols()));
    summary.scale = s;
    Ok(summary)
}

/// Householder reduction of the lower triangle; returns diagonal and
/// subdiagonal (`e[0] = 0`, `e[i]` couples rows `i-1` and `i`).
fn tridiagonalize(w: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = w.rows();
    let mut a: Vec<f64> = w.as_slice().to_vec();
    let at = |i: usize, j: usize| i * n + j;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[at(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[at(i, l)];
            } else {
                for k in 0..=l {
                    a[at(i, k)] /= scale;
                    h += a[at(i, k)] * a[at(i, k)];
                }
                let f = a[at(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[at(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[at(j, k)] * a[at(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[at(k, j)] * a[at(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[at(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[at(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[at(j, k)] -= f * e[k] + g * a[at(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[at(i, l)];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = a[at(i, i)];
    }
    (d, e)
}

fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence {
                    what: "tridiagonal QL",
                    iterations: MAX_QL_SWEEPS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
