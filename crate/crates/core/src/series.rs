//! The matrix-series container and the preprocessing steps applied before
//! estimation (standardization and imputation of missing entries).

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Minimum length: lag-1 and lag-2 covariances must be computable.
pub const MIN_LENGTH: usize = 3;

/// An ordered sequence of `n` real `p x q` observation matrices.
///
/// Slices are stored as column-major `DMatrix` values, so `vec(Y_t)` is the
/// slice's underlying storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    p: usize,
    q: usize,
    slices: Vec<DMatrix<f64>>,
}

impl MatrixSeries {
    /// Validates dimensions, length and finiteness.
    pub fn new(slices: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = slices.first().ok_or(Error::TooShort {
            needed: MIN_LENGTH,
            got: 0,
        })?;
        let (p, q) = first.shape();
        if p == 0 || q == 0 {
            return Err(Error::DimensionMismatch(format!(
                "slices must be at least 1x1, got {p}x{q}"
            )));
        }
        if slices.len() < MIN_LENGTH {
            return Err(Error::TooShort {
                needed: MIN_LENGTH,
                got: slices.len(),
            });
        }
        for (t, s) in slices.iter().enumerate() {
            if s.shape() != (p, q) {
                return Err(Error::DimensionMismatch(format!(
                    "slice {t} is {}x{}, expected {p}x{q}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            if let Some(idx) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEntry {
                    i: idx % p,
                    j: idx / p,
                    t,
                });
            }
        }
        Ok(Self { p, q, slices })
    }

    /// Builds a series entrywise from `f(i, j, t)`.
    pub fn from_fn<F>(p: usize, q: usize, n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let slices = (0..n).map(|t| DMatrix::from_fn(p, q, |i, j| f(i, j, t))).collect();
        Self::new(slices)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.slices
    }

    pub fn slice(&self, t: usize) -> &DMatrix<f64> {
        &self.slices[t]
    }

    pub fn into_slices(self) -> Vec<DMatrix<f64>> {
        self.slices
    }

    /// Entry `y_{i,j,t}` (0-based).
    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        self.slices[t][(i, j)]
    }

    /// Full-sample mean slice.
    pub fn mean(&self) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.p, self.q);
        for s in &self.slices {
            acc += s;
        }
        acc / self.n() as f64
    }

    /// The series of transposed slices.
    pub fn transpose(&self) -> MatrixSeries {
        MatrixSeries {
            p: self.q,
            q: self.p,
            slices: self.slices.iter().map(|s| s.transpose()).collect(),
        }
    }

    /// Contiguous sub-series `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<MatrixSeries> {
        if start + len > self.n() {
            return Err(Error::WindowTooLong(format!(
                "window [{start}, {}) exceeds series length {}",
                start + len,
                self.n()
            )));
        }
        MatrixSeries::new(self.slices[start..start + len].to_vec())
    }

    /// The `n x pq` data matrix whose rows are `vec(Y_t)`.
    pub fn data_matrix(&self) -> DMatrix<f64> {
        let pq = self.p * self.q;
        DMatrix::from_fn(self.n(), pq, |t, k| self.slices[t].as_slice()[k])
    }
}

/// Marks missing entries of a `p x q x n` series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesMask {
    p: usize,
    q: usize,
    n: usize,
    missing: Vec<bool>,
}

impl SeriesMask {
    /// A mask with nothing missing.
    pub fn empty(p: usize, q: usize, n: usize) -> Self {
        Self {
            p,
            q,
            n,
            missing: alloc::vec![false; p * q * n],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.p, self.q, self.n)
    }

    fn index(&self, i: usize, j: usize, t: usize) -> usize {
        (t * self.q + j) * self.p + i
    }

    pub fn set_missing(&mut self, i: usize, j: usize, t: usize) {
        let k = self.index(i, j, t);
        self.missing[k] = true;
    }

    pub fn is_missing(&self, i: usize, j: usize, t: usize) -> bool {
        self.missing[self.index(i, j, t)]
    }

    pub fn count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }
}

/// A standardized series together with the affine parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub series: MatrixSeries,
    pub means: DMatrix<f64>,
    pub std_devs: DMatrix<f64>,
}

impl Standardized {
    /// Maps a standardized slice back to the original scale.
    pub fn restore(&self, slice: &DMatrix<f64>) -> DMatrix<f64> {
        slice.component_mul(&self.std_devs) + &self.means
    }
}

/// Rescales every component series to mean 0 and variance 1.
///
/// The variance uses divisor `n`.
pub fn standardize(series: &MatrixSeries) -> Result<Standardized> {
    let n = series.n() as f64;
    let means = series.mean();
    let mut var = DMatrix::<f64>::zeros(series.p(), series.q());
    for s in series.slices() {
        let d = s - &means;
        var += d.component_mul(&d);
    }
    var /= n;
    let std_devs = var.map(|v| v.sqrt());
    for j in 0..series.q() {
        for i in 0..series.p() {
            let scale = 1.0 + means[(i, j)].abs();
            if std_devs[(i, j)] <= 1e-14 * scale {
                return Err(Error::ZeroVariance { i, j });
            }
        }
    }
    let slices = series
        .slices()
        .iter()
        .map(|s| (s - &means).component_div(&std_devs))
        .collect();
    Ok(Standardized {
        series: MatrixSeries::new(slices)?,
        means,
        std_devs,
    })
}

/// Imputation weights on `y_{t-1}`, `y_{t-2}`, `y_{t-3}`.
pub const IMPUTATION_WEIGHTS: [f64; 3] = [0.5, 0.3, 0.2];

/// Replaces masked entries by `0.5 y_{t-1} + 0.3 y_{t-2} + 0.2 y_{t-3}`,
/// sweeping forward in time so imputed values feed later imputations.
pub fn impute_missing(series: &MatrixSeries, mask: &SeriesMask) -> Result<MatrixSeries> {
    if mask.dims() != (series.p(), series.q(), series.n()) {
        return Err(Error::ShapeMismatch(format!(
            "mask is {:?}, series is {:?}",
            mask.dims(),
            (series.p(), series.q(), series.n())
        )));
    }
    let mut slices = series.slices().to_vec();
    for t in 0..series.n() {
        for j in 0..series.q() {
            for i in 0..series.p() {
                if !mask.is_missing(i, j, t) {
                    continue;
                }
                if t < 3 {
                    return Err(Error::InsufficientHistory { i, j, t });
                }
                let value = IMPUTATION_WEIGHTS
                    .iter()
                    .enumerate()
                    .map(|(lag, w)| w * slices[t - lag - 1][(i, j)])
                    .sum();
                slices[t][(i, j)] = value;
            }
        }
    }
    MatrixSeries::new(slices)
}
