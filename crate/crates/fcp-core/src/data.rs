//! Immutable datasets shared by the loss models and experiment harnesses.

use thiserror::Error;

/// Whether labels are categorical (`{-1, +1}`) or real-valued responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Classification,
    Regression,
}

/// An `n x p` design matrix with responses, immutable after construction.
/// Rows are samples; `x` is stored row-major.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    p: usize,
    /// Seed of the stream that generated the data (0 for external data);
    /// recorded so experiment outputs can cite their provenance.
    pub seed: u64,
    pub kind: DatasetKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("design matrix size {got} does not equal n*p = {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("response length {got} does not equal n = {expected}")]
    ResponseMismatch { got: usize, expected: usize },
    #[error("classification labels must be -1 or +1; found {value} at row {row}")]
    BadLabel { row: usize, value: f64 },
    #[error("non-finite entry at position {at}")]
    NonFinite { at: usize },
}

impl Dataset {
    pub fn new(
        x: Vec<f64>,
        y: Vec<f64>,
        n: usize,
        p: usize,
        seed: u64,
        kind: DatasetKind,
    ) -> Result<Self, DataError> {
        if x.len() != n * p {
            return Err(DataError::ShapeMismatch {
                got: x.len(),
                expected: n * p,
            });
        }
        if y.len() != n {
            return Err(DataError::ResponseMismatch {
                got: y.len(),
                expected: n,
            });
        }
        if let Some(at) = x.iter().chain(y.iter()).position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { at });
        }
        if kind == DatasetKind::Classification {
            if let Some(row) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
                return Err(DataError::BadLabel { row, value: y[row] });
            }
        }
        Ok(Self {
            x,
            y,
            n,
            p,
            seed,
            kind,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Feature row of sample `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
}

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Max-magnitude norm; 0 for the empty slice.
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

/// l1 norm.
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}
