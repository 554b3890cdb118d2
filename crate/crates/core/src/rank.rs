//! Order selection by the ridge-shifted eigenvalue-ratio rule.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::covariance::thresholded_lag_covs;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::series::MatrixSeries;

/// Eigenvalues below this fraction of the largest are clamped to zero.
pub const CLAMP_RELATIVE: f64 = 1e-14;
/// Absolute floor below which a spectrum counts as all-zero.
pub const ZERO_SPECTRUM_FLOOR: f64 = 1e-300;

/// Which matrix the spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSource {
    /// `Σ̂_k Σ̂_kᵀ` summed over lags (`p x p`).
    M1,
    /// `Σ̂_kᵀ Σ̂_k` summed over lags (`q x q`).
    M2,
    /// `Σ̂_1ᵀ Σ̂_1` of the direct estimator.
    K1q,
}

impl fmt::Display for RankSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankSource::M1 => "M1",
            RankSource::M2 => "M2",
            RankSource::K1q => "K1q",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankDiagnostics {
    /// Nonincreasing, nonnegative (after clamping).
    pub eigenvalues: Vec<f64>,
    /// `(λ_{j+1} + c_n) / (λ_j + c_n)` for `j = 1..=R`; `+∞` where undefined.
    pub ratios: Vec<f64>,
    pub d_hat: usize,
    pub source: RankSource,
    pub search_bound: usize,
    pub c_n: f64,
}

/// Parameters of the ratio rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRule {
    pub c_n: f64,
    pub alpha: f64,
}

impl Default for RatioRule {
    fn default() -> Self {
        Self { c_n: 0.0, alpha: 0.5 }
    }
}

/// `M̂₁ = Σ_k Σ̂_k Σ̂_kᵀ` and `M̂₂ = Σ_k Σ̂_kᵀ Σ̂_k` over `k = 1..=max_lag`.
pub fn build_m(series: &MatrixSeries, xi: &[f64], max_lag: usize, delta1: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if max_lag == 0 {
        return Err(Error::LagTooLarge {
            lag: 0,
            max: series.n().saturating_sub(2),
        });
    }
    let covs = thresholded_lag_covs(series, xi, max_lag, delta1)?;
    Ok(m_from_covs(&covs, series.p(), series.q()))
}

pub(crate) fn m_from_covs(covs: &[DMatrix<f64>], p: usize, q: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut m1 = DMatrix::zeros(p, p);
    let mut m2 = DMatrix::zeros(q, q);
    for s in covs {
        m1 += s * s.transpose();
        m2 += s.transpose() * s;
    }
    (symmetrize(m1), symmetrize(m2))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `M1` when `p >= q`, else `M2`.
pub fn select_rank_source(p: usize, q: usize) -> RankSource {
    if p >= q {
        RankSource::M1
    } else {
        RankSource::M2
    }
}

/// `R = ⌊α · min(p, q)⌋`, raised to 1 when it would be 0.
pub fn search_bound(alpha: f64, p: usize, q: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let r = (alpha * p.min(q) as f64).floor() as usize;
    if r == 0 {
        log::warn!("search bound floor({alpha} * {}) is 0; using 1", p.min(q));
        return Ok(1);
    }
    Ok(r)
}

/// Eigen-decomposes `m` and applies the ratio rule with bound `R` from
/// `min_dim = min(p, q)`.
pub fn estimate_rank(m: &DMatrix<f64>, rule: RatioRule, min_dim: usize, source: RankSource) -> Result<RankDiagnostics> {
    if m.nrows() < 2 || m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "rank estimation needs a square matrix of size >= 2, got {:?}",
            m.shape()
        )));
    }
    let (eigenvalues, _) = sym_eigen_desc(m);
    let bound = search_bound(rule.alpha, min_dim, min_dim)?;
    rank_from_spectrum(eigenvalues, rule.c_n, bound, source)
}

/// Ratio rule on a given spectrum (any order; it is sorted here).
pub fn rank_from_spectrum(
    mut eigenvalues: Vec<f64>,
    c_n: f64,
    bound: usize,
    source: RankSource,
) -> Result<RankDiagnostics> {
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    for v in eigenvalues.iter_mut() {
        if *v < CLAMP_RELATIVE * top || *v < 0.0 {
            *v = 0.0;
        }
    }
    if c_n == 0.0 && top <= ZERO_SPECTRUM_FLOOR {
        return Err(Error::AllZeroSpectrum);
    }
    let bound = bound.min(eigenvalues.len().saturating_sub(1)).max(1);
    let ratios: Vec<f64> = (0..bound)
        .map(|j| {
            let den = eigenvalues[j] + c_n;
            if den <= 0.0 {
                f64::INFINITY
            } else {
                (eigenvalues[j + 1] + c_n) / den
            }
        })
        .collect();
    let mut d_hat = 1;
    let mut best = ratios[0];
    for (j, r) in ratios.iter().enumerate().skip(1) {
        if *r < best {
            best = *r;
            d_hat = j + 1;
        }
    }
    Ok(RankDiagnostics {
        eigenvalues,
        ratios,
        d_hat,
        source,
        search_bound: bound,
        c_n,
    })
}
