//! Dense symmetric matrices sized for communication graphs (a handful of agents).

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt, Vec2};

/// Tolerance used when checking symmetry on construction.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinalgError {
    NotSquare { len: usize, dim: usize },
    NotSymmetric { row: usize, col: usize },
    NotPositiveDefinite,
    Singular,
    DimensionMismatch { expected: usize, found: usize },
}

impl core::fmt::Display for LinalgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LinalgError::NotSquare { len, dim } => {
                write!(f, "{len} entries cannot form a {dim}x{dim} matrix")
            }
            LinalgError::NotSymmetric { row, col } => {
                write!(f, "entries ({row},{col}) and ({col},{row}) differ")
            }
            LinalgError::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
            LinalgError::Singular => f.write_str("matrix is singular"),
            LinalgError::DimensionMismatch { expected, found } => {
                write!(f, "expected dimension {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Dense symmetric real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting asymmetric input.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != dim * dim {
            return Err(LinalgError::NotSquare {
                len: data.len(),
                dim,
            });
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                let (a, b) = (data[r * dim + c], data[c * dim + r]);
                if abs(a - b) > SYMMETRY_TOL * (1.0 + abs(a).max(abs(b))) {
                    return Err(LinalgError::NotSymmetric { row: r, col: c });
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self, LinalgError> {
        Self::from_row_major(N, rows.iter().flatten().copied().collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    /// Sets both `(row, col)` and `(col, row)`.
    pub fn set_sym(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
        self.data[col * self.dim + row] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix, LinalgError> {
        if other.dim != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "vector length must match matrix dimension");
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(self ⊗ I₂) · s` for a stacked vector of planar blocks.
    pub fn kron_i2_mul(&self, s: &[Vec2]) -> Vec<Vec2> {
        assert_eq!(s.len(), self.dim, "block count must match matrix dimension");
        (0..self.dim)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(s)
                    .fold(Vec2::ZERO, |acc, (&h, &v)| acc + h * v)
            })
            .collect()
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.dim {
            for c in (r + 1)..self.dim {
                worst = worst.max(abs(self.get(r, c) - self.get(c, r)));
            }
        }
        worst
    }

    /// All eigenvalues in ascending order (cyclic Jacobi rotations).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.data.clone();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
        if n == 0 {
            return Vec::new();
        }
        for _sweep in 0..100 {
            let mut off = 0.0;
            for r in 0..n {
                for c in (r + 1)..n {
                    off += a[r * n + c] * a[r * n + c];
                }
            }
            if sqrt(off) <= 1e-300 + 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    let t = sign / (abs(theta) + sqrt(theta * theta + 1.0));
                    let c = 1.0 / sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eig.sort_by(|x, y| x.total_cmp(y));
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(f64::NAN)
    }

    /// Lower Cholesky factor, row-major.
    pub fn cholesky(&self) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(LinalgError::NotPositiveDefinite);
                    }
                    l[i * n + i] = sqrt(sum);
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(l)
    }

    /// Solves `self · x = b` for a positive definite matrix.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: b.len(),
            });
        }
        let n = self.dim;
        let l = self.cholesky()?;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= l[i * n + k] * y[k];
            }
            y[i] = sum / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= l[k * n + i] * x[k];
            }
            x[i] = sum / l[i * n + i];
        }
        Ok(x)
    }
}

/// Solves the general square system `a · x = b` in place by Gaussian
/// elimination with partial pivoting. `a` is row-major and is overwritten;
/// the solution replaces `b`.
pub fn lu_solve(a: &mut [f64], b: &mut [f64]) -> Result<(), LinalgError> {
    let n = b.len();
    if a.len() != n * n {
        return Err(LinalgError::NotSquare { len: a.len(), dim: n });
    }
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if abs(a[row * n + col]) > abs(a[pivot * n + col]) {
                pivot = row;
            }
        }
        let p = a[pivot * n + col];
        if p == 0.0 || !p.is_finite() {
            return Err(LinalgError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in row + 1..n {
            sum -= a[row * n + k] * b[k];
        }
        b[row] = sum / a[row * n + row];
    }
    Ok(())
}
