//! Lag cross-covariances between a matrix series and a scalar proxy, the hard
//! threshold operator, and the projected covariance used by the refined
//! estimator.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::orthonormality_defect;
use crate::series::MatrixSeries;

/// A `p x q` lag-`k` cross-covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCovariance {
    pub lag: usize,
    pub matrix: DMatrix<f64>,
}

fn check_lag(k: usize, n: usize) -> Result<()> {
    let max = n.saturating_sub(2);
    if k == 0 || k > max {
        return Err(Error::LagTooLarge { lag: k, max });
    }
    Ok(())
}

/// `(n-k)^{-1} Σ_{t>k} (Y_t - Ȳ)(ξ_{t-k} - ξ̄)` with full-sample means.
pub fn lag_cov_y_xi(series: &MatrixSeries, xi: &[f64], k: usize) -> Result<LagCovariance> {
    let n = series.n();
    if xi.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "proxy has length {}, series has {n}",
            xi.len()
        )));
    }
    check_lag(k, n)?;
    let y_mean = series.mean();
    let xi_mean = xi.iter().sum::<f64>() / n as f64;
    let mut acc = DMatrix::zeros(series.p(), series.q());
    for t in k..n {
        let w = xi[t - k] - xi_mean;
        acc += (series.slice(t) - &y_mean) * w;
    }
    Ok(LagCovariance {
        lag: k,
        matrix: acc / (n - k) as f64,
    })
}

/// Hard threshold: keeps entries with `|w| >= delta`, zeroes the rest.
pub fn threshold(m: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    if delta <= 0.0 {
        return m.clone();
    }
    m.map(|w| if w.abs() >= delta { w } else { 0.0 })
}

/// Thresholded lag covariances `T_δ{Σ̂_{Y,ξ}(k)}` for `k = 1..=max_lag`.
pub fn thresholded_lag_covs(
    series: &MatrixSeries,
    xi: &[f64],
    max_lag: usize,
    delta: f64,
) -> Result<Vec<DMatrix<f64>>> {
    (1..=max_lag)
        .map(|k| lag_cov_y_xi(series, xi, k).map(|c| threshold(&c.matrix, delta)))
        .collect()
}

fn check_projection(series: &MatrixSeries, p_hat: &DMatrix<f64>, q_hat: &DMatrix<f64>, w: &DVector<f64>) -> Result<()> {
    let d = p_hat.ncols();
    if p_hat.nrows() != series.p() || q_hat.nrows() != series.q() || q_hat.ncols() != d || w.len() != d * d {
        return Err(Error::ShapeMismatch(format!(
            "P is {:?}, Q is {:?}, w has {} entries for a {}x{} series",
            p_hat.shape(),
            q_hat.shape(),
            w.len(),
            series.p(),
            series.q()
        )));
    }
    let deviation = orthonormality_defect(p_hat).max(orthonormality_defect(q_hat));
    if deviation > 1e-10 {
        return Err(Error::NonOrthonormalProjection { deviation });
    }
    Ok(())
}

/// `P̂ᵀ Θ̂ᵀ T_δ{Σ̂_Y̌(k)} Q̂` with `Θ̂ = I_p ⊗ {(Q̂ ⊗ P̂) w}`.
///
/// With `delta == 0` the thresholding is the identity and the result is the
/// lag cross-covariance of `Ẑ_t = P̂ᵀ Y_t Q̂` with `η̂_t = wᵀ vec(Ẑ_t)`, which is
/// computed directly. Otherwise the streamed path is used.
pub fn projected_cov_z_eta(
    series: &MatrixSeries,
    p_hat: &DMatrix<f64>,
    q_hat: &DMatrix<f64>,
    w: &DVector<f64>,
    k: usize,
    delta: f64,
) -> Result<DMatrix<f64>> {
    if delta > 0.0 {
        return projected_cov_z_eta_streamed(series, p_hat, q_hat, w, k, delta);
    }
    check_projection(series, p_hat, q_hat, w)?;
    check_lag(k, series.n())?;
    let z = project_series(series, p_hat, q_hat);
    let eta: Vec<f64> = z
        .slices()
        .iter()
        .map(|s| w.dot(&DVector::from_column_slice(s.as_slice())))
        .collect();
    Ok(lag_cov_y_xi(&z, &eta, k)?.matrix)
}

/// Streamed evaluation of the projected covariance.
///
/// `Σ̂_Y̌(k)` is the `(p·pq) x q` matrix `(n-k)^{-1} Σ (Y_t - Ȳ) ⊗ vec(Y_{t-k} - Ȳ)`.
/// Its row block `i` (size `pq x q`) is built, thresholded and contracted with
/// `c = vec(P̂ W Q̂ᵀ)` one block at a time, in order `i = 0..p`; the full
/// matrix is never formed.
pub fn projected_cov_z_eta_streamed(
    series: &MatrixSeries,
    p_hat: &DMatrix<f64>,
    q_hat: &DMatrix<f64>,
    w: &DVector<f64>,
    k: usize,
    delta: f64,
) -> Result<DMatrix<f64>> {
    check_projection(series, p_hat, q_hat, w)?;
    let n = series.n();
    check_lag(k, n)?;
    let (p, q) = (series.p(), series.q());
    let d = p_hat.ncols();
    let w_mat = DMatrix::from_column_slice(d, d, w.as_slice());
    let c = p_hat * w_mat * q_hat.transpose();
    let c = DVector::from_column_slice(c.as_slice());

    let mean = series.mean();
    let centered: Vec<DMatrix<f64>> = series.slices().iter().map(|s| s - &mean).collect();
    let m = n - k;
    // Columns vec(Y_{t-k} - Ȳ), t = k..n.
    let lagged = DMatrix::from_fn(p * q, m, |r, s| centered[s].as_slice()[r]);
    let mut rows = DMatrix::zeros(p, q);
    let mut leading = DMatrix::zeros(q, m);
    for i in 0..p {
        for s in 0..m {
            for j in 0..q {
                leading[(j, s)] = centered[s + k][(i, j)];
            }
        }
        let block = &lagged * leading.transpose() / m as f64;
        let block = threshold(&block, delta);
        rows.set_row(i, &(c.transpose() * block));
    }
    Ok(p_hat.transpose() * rows * q_hat)
}

/// `Ẑ_t = P̂ᵀ Y_t Q̂` for every `t`.
pub fn project_series(series: &MatrixSeries, p_hat: &DMatrix<f64>, q_hat: &DMatrix<f64>) -> MatrixSeries {
    let pt = p_hat.transpose();
    let slices = series.slices().iter().map(|y| &pt * y * q_hat).collect();
    MatrixSeries::new(slices).expect("projection of a valid series is valid")
}
