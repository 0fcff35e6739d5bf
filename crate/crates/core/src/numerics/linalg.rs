//! Dense row-major matrices with the handful of operations the experiments need.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `s · AᵀA`, exploiting symmetry and sparsity of rows.
    pub fn gram(&self, s: f64) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            let nz: Vec<usize> = (0..n).filter(|&j| r[j] != 0.0).collect();
            for (a, &j) in nz.iter().enumerate() {
                let rj = r[j];
                for &k in &nz[a..] {
                    g.data[j * n + k] += rj * r[k];
                }
            }
        }
        for j in 0..n {
            for k in j..n {
                let v = g.data[j * n + k] * s;
                g.data[j * n + k] = v;
                g.data[k * n + j] = v;
            }
        }
        g
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Largest |W_ij − W_ji|; `+inf` for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square complex matrix, row-major.
pub type CMatrix = Vec<Complex64>;

/// Inverse of `W + z I` for real symmetric-or-not `W`, by Gauss–Jordan with
/// partial pivoting.
pub fn shifted_inverse(w: &Matrix, z: Complex64) -> Result<CMatrix> {
    let n = w.rows();
    if w.cols() != n {
        return Err(Error::dim("shifted inverse needs a square matrix"));
    }
    let mut a: CMatrix = w.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for i in 0..n {
        a[i * n + i] += z;
    }
    let mut inv: CMatrix = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm()))
            .unwrap_or(col);
        if a[piv * n + col].norm() == 0.0 {
            return Err(Error::non_finite("singular shifted matrix"));
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = a[col * n + col].inv();
        for k in 0..n {
            a[col * n + k] *= d;
            inv[col * n + k] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f.norm() == 0.0 {
                continue;
            }
            for k in 0..n {
                let ak = a[col * n + k];
                let ik = inv[col * n + k];
                a[r * n + k] -= f * ak;
                inv[r * n + k] -= f * ik;
            }
        }
    }
    Ok(inv)
}

/// Product of two square complex matrices.
pub fn cmatmul(a: &[Complex64], b: &[Complex64], n: usize) -> CMatrix {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Product of a real and a complex square matrix.
pub fn rcmatmul(a: &Matrix, b: &[Complex64]) -> CMatrix {
    let n = a.rows();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += b[k * n + j] * aik;
            }
        }
    }
    out
}

pub fn ctrace(a: &[Complex64], n: usize) -> Complex64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}


#[cfg(test)]
mod proptests {
    use nalgebra::{Complex, DMatrix};
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shifted_inverse_matches_nalgebra(
            v in (1usize..7).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n * n)),
            re in -2.0f64..2.0,
            im in 0.2f64..2.0,
        ) {
            let n = (v.len() as f64).sqrt().round() as usize;
            let w = Matrix::from_vec(n, n, v).unwrap();
            let ours = shifted_inverse(&w, Complex64::new(re, im)).unwrap();
            let shifted = DMatrix::from_fn(n, n, |i, j| Complex::new(w[(i, j)], 0.0) + if i == j { Complex::new(re, im) } else { Complex::new(0.0, 0.0) });
            if let Some(inv) = shifted.try_inverse() {
                for i in 0..n {
                    for j in 0..n {
                        prop_assert!((ours[i * n + j] - inv[(i, j)]).norm() < 1e-8 * (1.0 + inv[(i, j)].norm()));
                    }
                }
            }
        }
    }
}
