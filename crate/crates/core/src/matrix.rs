//! Small dense real matrices with exponential, logarithm and norm estimates.
//!
//! Sizes stay at or below [`MAX_DIM`]; every algorithm here is the plain
//! textbook variant sized for that regime.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_DIM: usize = 16;

/// Taylor terms used by [`Matrix::exp`] after scaling.
const EXP_TERMS: usize = 20;
/// Scaling target for [`Matrix::exp`], Frobenius norm.
const EXP_SCALE_RADIUS: f64 = 0.5;
/// Mercator terms used by [`Matrix::log`].
const LOG_TERMS: usize = 40;
const LOG_SERIES_RADIUS: f64 = 0.5;
const LOG_MAX_ROOTS: usize = 20;
const SQRT_MAX_ITERS: usize = 50;
const SQRT_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("non-finite entry in matrix")]
    NonFinite,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0} (1..={MAX_DIM})")]
    UnsupportedDim(usize),
    #[error("singular matrix")]
    Singular,
    #[error("log-domain: square-root reduction left ||A - I||_F = {0:.3e}")]
    LogDomain(f64),
    #[error("square root iteration did not converge")]
    SqrtDiverged,
}

/// Square matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_DIM, "matrix dimension {n} out of range");
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Builds from rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM {
            return Err(MatError::UnsupportedDim(n));
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(MatError::DimensionMismatch(n, r.len()));
            }
            data.extend_from_slice(r);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Self { n, data })
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * m.n + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<(), MatError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(MatError::NonFinite)
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        (0..self.n).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Matrix) -> Matrix {
        &(self * other) - &(other * self)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix, MatError> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (piv, pval) =
                (col..n)
                    .map(|r| (r, a.get(r, col).abs()))
                    .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pval <= 1e-14 * scale {
                return Err(MatError::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let d = a.get(col, col);
            for j in 0..n {
                a.data[col * n + j] /= d;
                inv.data[col * n + j] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                    inv.data[r * n + j] -= f * inv.data[col * n + j];
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a.get(x, col).abs().total_cmp(&a.get(y, col).abs())).unwrap_or(col);
            let p = a.get(piv, col);
            if p == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            det *= p;
            for r in col + 1..n {
                let f = a.get(r, col) / p;
                for j in col..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                }
            }
        }
        det
    }

    /// Matrix exponential by scaling and squaring with a truncated Taylor series.
    pub fn exp(&self) -> Result<Matrix, MatError> {
        self.check_finite()?;
        let norm = self.frobenius();
        let mut squarings = 0u32;
        let mut s = 1.0;
        while norm * s > EXP_SCALE_RADIUS {
            s *= 0.5;
            squarings += 1;
        }
        let a = self.scale(s);
        let n = self.n;
        let id = Matrix::identity(n);
        let mut sum = Matrix::identity(n);
        // drop terms whose bound ‖A‖ᵏ/k! is already below half an ulp
        let scaled = norm * s;
        let mut terms = EXP_TERMS;
        let mut bound = 1.0;
        for k in 1..=EXP_TERMS {
            bound *= scaled / k as f64;
            if bound < f64::EPSILON * 0.25 {
                terms = k;
                break;
            }
        }
        for k in (1..=terms).rev() {
            sum = &id + &(&a * &sum).scale(1.0 / k as f64);
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        Ok(sum)
    }

    /// Principal square root via the Denman-Beavers iteration.
    pub fn sqrt(&self) -> Result<Matrix, MatError> {
        self.check_finite()?;
        let mut y = self.clone();
        let mut z = Matrix::identity(self.n);
        for _ in 0..SQRT_MAX_ITERS {
            let yi = y.inverse()?;
            let zi = z.inverse()?;
            let y_next = (&y + &zi).scale(0.5);
            let z_next = (&z + &yi).scale(0.5);
            let delta = (&y_next - &y).frobenius();
            y = y_next;
            z = z_next;
            if !y.is_finite() {
                return Err(MatError::SqrtDiverged);
            }
            if delta <= SQRT_TOL * y.frobenius().max(1.0) {
                return Ok(y);
            }
        }
        Err(MatError::SqrtDiverged)
    }

    /// Principal logarithm for matrices that square-root reduction can bring
    /// within the Mercator series radius.
    pub fn log(&self) -> Result<Matrix, MatError> {
        self.check_finite()?;
        let n = self.n;
        let id = Matrix::identity(n);
        let mut a = self.clone();
        let mut roots = 0u32;
        loop {
            let dist = (&a - &id).frobenius();
            if dist <= LOG_SERIES_RADIUS {
                break;
            }
            if roots as usize >= LOG_MAX_ROOTS {
                return Err(MatError::LogDomain(dist));
            }
            a = a.sqrt().map_err(|_| MatError::LogDomain(dist))?;
            roots += 1;
        }
        let e = &a - &id;
        let mut power = e.clone();
        let mut sum = e.clone();
        for k in 2..=LOG_TERMS {
            power = &power * &e;
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            let c = sign / k as f64;
            sum = &sum + &power.scale(c);
        }
        Ok(sum.scale(f64::powi(2.0, roots as i32)))
    }

    /// Operator 2-norm by power iteration on `AᵀA`, with Frobenius as certified upper bound.
    pub fn op_norm(&self) -> NormEstimate {
        let frobenius = self.frobenius();
        if frobenius == 0.0 {
            return NormEstimate { operator: 0.0, frobenius };
        }
        let n = self.n;
        let ata = &self.transpose() * self;
        // fixed start vector with distinct entries
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * i as f64 / n as f64).collect();
        normalize(&mut v);
        let mut lambda = 0.0;
        let mut stable = 0;
        for _ in 0..20_000 {
            let mut w = ata.mul_vec(&v);
            let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            let wn = normalize(&mut w);
            if wn == 0.0 {
                break;
            }
            v = w;
            if (rq - lambda).abs() <= 1e-16 * rq.abs() {
                stable += 1;
                if stable >= 3 {
                    lambda = rq;
                    break;
                }
            } else {
                stable = 0;
            }
            lambda = rq;
        }
        let operator = lambda.max(0.0).sqrt().min(frobenius);
        NormEstimate { operator, frobenius }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

/// Spectral norm estimate paired with the Frobenius upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub operator: f64,
    pub frobenius: f64,
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        Matrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        Matrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Matrix { n, data: out }
    }
}
