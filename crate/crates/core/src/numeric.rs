//! Kernels, Gram matrices and the dense SPD solve behind kernel-ELM training.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::N_FEATURES;

#[derive(Debug, Error, PartialEq)]
pub enum NumericError {
    #[error("non-finite value in kernel input")]
    NonFinite,
    #[error("rbf sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {n}x{n}, vector has {len} entries")]
    DimensionMismatch { n: usize, len: usize },
    #[error("empty input")]
    Empty,
}

/// Nine cytology scores promoted to reals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    /// Puts the first coordinate at `x` and zeroes the rest; handy for
    /// one-dimensional toy problems.
    pub fn embed_1d(x: f64) -> Self {
        let mut v = [0.0; N_FEATURES];
        v[0] = x;
        FeatureVector(v)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Min-max scaling over the fixed score domain [1, 10].
    pub fn unit_scaled(&self) -> FeatureVector {
        FeatureVector(self.0.map(|v| (v - 1.0) / 9.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// exp(-|x - y|^2 / (2 sigma^2))
    Rbf {
        sigma: f64,
    },
    Linear,
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self, NumericError> {
        let spec = KernelSpec::Rbf { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NumericError> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(NumericError::InvalidSigma(sigma))
            }
            _ => Ok(()),
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Rbf { sigma } => Some(sigma),
            KernelSpec::Linear => None,
        }
    }

    /// Unchecked evaluation for inputs already known to be finite.
    #[inline]
    pub fn eval(&self, x: &FeatureVector, y: &FeatureVector) -> f64 {
        match *self {
            KernelSpec::Rbf { sigma } => (-x.squared_distance(y) / (2.0 * sigma * sigma)).exp(),
            KernelSpec::Linear => x.dot(y),
        }
    }
}

pub fn kernel_eval(
    spec: &KernelSpec,
    x: &FeatureVector,
    y: &FeatureVector,
) -> Result<f64, NumericError> {
    spec.validate()?;
    if !x.is_finite() || !y.is_finite() {
        return Err(NumericError::NonFinite);
    }
    Ok(spec.eval(x, y))
}

/// Dense symmetric matrix, row-major. Only constructors that mirror entries
/// are exposed, so `get(i, j) == get(j, i)` bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Evaluates `f` on the upper triangle and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Builds from rows, rejecting anything not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        let symmetric = rows
            .iter()
            .enumerate()
            .all(|(i, row)| (0..i).all(|j| row[j] == rows[j][i]));
        if !symmetric {
            return None;
        }
        Some(SymMatrix {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn add_to_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += value;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }
}

pub fn kernel_matrix(spec: &KernelSpec, xs: &[FeatureVector]) -> Result<SymMatrix, NumericError> {
    spec.validate()?;
    if xs.is_empty() {
        return Err(NumericError::Empty);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(NumericError::NonFinite);
    }
    Ok(SymMatrix::from_fn(xs.len(), |i, j| {
        spec.eval(&xs[i], &xs[j])
    }))
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Fails when a pivot drops to `1e-12 * max(diag A)` or below.
    pub fn factor(a: &SymMatrix) -> Result<Self, NumericError> {
        let n = a.dim();
        let floor = 1e-12 * a.max_diagonal();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let pivot = a.get(j, j) - row_j.iter().map(|v| v * v).sum::<f64>();
            // written so that a NaN pivot is rejected too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(pivot > floor) {
                return Err(NumericError::NotPositiveDefinite { row: j, pivot });
            }
            let d = pivot.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
                l[i * n + j] = (a.get(i, j) - s) / d;
            }
        }
        Ok(Cholesky { n, lower: l })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumericError::DimensionMismatch { n, len: b.len() });
        }
        // L y = b
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.lower[i * n + k] * y[k]).sum();
            y[i] = (b[i] - s) / self.lower[i * n + i];
        }
        // Lᵀ x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.lower[k * n + i] * x[k]).sum();
            x[i] = (y[i] - s) / self.lower[i * n + i];
        }
        Ok(x)
    }
}

pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, NumericError> {
    if b.len() != a.dim() {
        return Err(NumericError::DimensionMismatch {
            n: a.dim(),
            len: b.len(),
        });
    }
    Cholesky::factor(a)?.solve(b)
}

/// Median of all pairwise Euclidean distances; falls back to 1.0 when the
/// points coincide (or there is only one).
pub fn median_heuristic_sigma(xs: &[FeatureVector]) -> f64 {
    let mut d = Vec::with_capacity(xs.len() * xs.len().saturating_sub(1) / 2);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            d.push(xs[i].squared_distance(&xs[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_unstable_by(f64::total_cmp);
    let m = d.len() / 2;
    let median = if d.len() % 2 == 0 {
        0.5 * (d[m - 1] + d[m])
    } else {
        d[m]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}
