//! Small dense complex linear algebra for the recovery routines.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Column-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_columns(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max_i ‖A(i, :)‖₂`.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).norm_sqr())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            .sqrt()
    }
}

pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin QR factorization grown one column at a time by classical Gram-Schmidt
/// with one reorthogonalization pass.
#[derive(Clone, Debug, Default)]
pub struct IncrementalQr {
    len: usize,
    /// Orthonormal basis vectors.
    q: Vec<Vec<Complex64>>,
    /// Column `k` of the upper-triangular factor holds `k + 1` entries.
    r: Vec<Vec<Complex64>>,
}

/// Relative residual norm below which an appended column counts as linearly
/// dependent on the existing ones.
pub const DEGENERACY_TOL: f64 = 1e-10;

impl IncrementalQr {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    pub fn basis(&self, k: usize) -> &[Complex64] {
        &self.q[k]
    }

    /// Appends a column. On near-dependence the factorization is left
    /// unchanged and `RankDeficient` is returned.
    pub fn push(&mut self, col: &[Complex64]) -> Result<()> {
        if col.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: col.len(),
            });
        }
        let original = norm(col);
        if original == 0.0 {
            return Err(Error::RankDeficient("zero column".into()));
        }
        let mut v = col.to_vec();
        let mut coeffs = vec![ZERO; self.q.len()];
        for _ in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let c = dot_conj(qk, &v);
                coeffs[k] += c;
                v.iter_mut().zip(qk).for_each(|(x, q)| *x -= c * q);
            }
        }
        let rem = norm(&v);
        if rem < DEGENERACY_TOL * original {
            return Err(Error::RankDeficient(format!(
                "residual projection {rem:.3e} of column norm {original:.3e}"
            )));
        }
        v.iter_mut().for_each(|x| *x /= rem);
        coeffs.push(Complex64::new(rem, 0.0));
        self.q.push(v);
        self.r.push(coeffs);
        Ok(())
    }

    /// Least-squares coefficients `argmin_X ‖A X - Y‖_F` for the columns pushed
    /// so far; returns a `rank × Y.cols()` matrix.
    pub fn solve(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.rows() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: y.rows(),
            });
        }
        let k = self.rank();
        let mut x = ComplexMatrix::zeros(k, y.cols());
        for t in 0..y.cols() {
            let z: Vec<Complex64> = self.q.iter().map(|q| dot_conj(q, y.column(t))).collect();
            // back substitution on R x = z
            let out = x.column_mut(t);
            for i in (0..k).rev() {
                let mut acc = z[i];
                for (j, oj) in out.iter().enumerate().take(k).skip(i + 1) {
                    acc -= self.r[j][i] * oj;
                }
                out[i] = acc / self.r[i][i];
            }
        }
        Ok(x)
    }
}
