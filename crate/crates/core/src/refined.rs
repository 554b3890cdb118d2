//! Refined estimator: project onto the leading eigenspaces of `M̂₁`, `M̂₂`
//! and solve a full-rank `d̂ x d̂` eigenproblem there.
//!
//! With `Ẑ_t = P̂ᵀY_tQ̂ ≈ U X_t Vᵀ`, the lag covariances of `Ẑ_t` against a
//! proxy `η̂_t` are `U D_k Vᵀ` for diagonal `D_k`, so the eigenvectors of
//! `Ĵ₁ = (Σ̂₁ᵀΣ̂₁)⁻¹Σ̂₁ᵀΣ̂₂` identify `V⁻ᵀ`, hence `U` and `V`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::covariance::{project_series, projected_cov_z_eta, thresholded_lag_covs};
use crate::error::{Error, Result};
use crate::estimate::{normalize_columns, CpEstimate, EstimatorConfig, Method};
use crate::factors::{assign_kappa, pair_conjugates, recover_factors};
use crate::linalg::{pinv_complex, real_eigen, sym_eigen_desc, to_complex, C64};
use crate::proxy::{self, ProxySeries};
use crate::rank::{estimate_rank, m_from_covs, select_rank_source, RankDiagnostics, RankSource, RatioRule};
use crate::series::MatrixSeries;

/// Gram matrices with a larger condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `p x d̂`, orthonormal columns.
    pub p_hat: DMatrix<f64>,
    /// `q x d̂`, orthonormal columns.
    pub q_hat: DMatrix<f64>,
    /// `Ẑ_t = P̂ᵀY_tQ̂`.
    pub z: MatrixSeries,
}

/// Top-`d̂` eigenvectors of `M̂₁` and `M̂₂` and the projected series.
pub fn project(series: &MatrixSeries, m1: &DMatrix<f64>, m2: &DMatrix<f64>, d_hat: usize) -> Result<Projection> {
    let (p, q) = (series.p(), series.q());
    if m1.shape() != (p, p) || m2.shape() != (q, q) {
        return Err(Error::ShapeMismatch(alloc::format!(
            "M1 is {:?} and M2 is {:?} for a {p}x{q} series",
            m1.shape(),
            m2.shape()
        )));
    }
    if d_hat == 0 || d_hat > p.min(q) {
        return Err(Error::InvalidConfig(alloc::format!(
            "projection order {d_hat} outside 1..={}",
            p.min(q)
        )));
    }
    let p_hat = leading(m1, d_hat, "M1");
    let q_hat = leading(m2, d_hat, "M2");
    let z = project_series(series, &p_hat, &q_hat);
    Ok(Projection { p_hat, q_hat, z })
}

fn leading(m: &DMatrix<f64>, d: usize, label: &str) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_desc(m);
    if d < vals.len() && vals[d - 1] - vals[d] < 1e-10 * vals[0] {
        log::warn!("eigen-gap collapse in {label} at order {d}; leading eigenvectors are indeterminate");
    }
    vecs.columns(0, d).into_owned()
}

/// Intermediate quantities of a refined fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedDetails {
    pub projection: Projection,
    pub xi: ProxySeries,
    pub eta: ProxySeries,
    /// `Σ̂_{Z,η}(1)` and `Σ̂_{Z,η}(2)`.
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
    pub j1: DMatrix<f64>,
    /// `Û⁻¹`; row `ℓ` is `û^ℓ`.
    pub u_inv: DMatrix<C64>,
}

pub fn refined_estimate(series: &MatrixSeries, config: &EstimatorConfig) -> Result<CpEstimate> {
    refined_estimate_detailed(series, config).map(|(est, _)| est)
}

pub fn refined_estimate_detailed(
    series: &MatrixSeries,
    config: &EstimatorConfig,
) -> Result<(CpEstimate, RefinedDetails)> {
    config.validate()?;
    let (p, q) = (series.p(), series.q());
    let xi = proxy::xi(series, config.proxy, config.seed)?;
    let rank = refined_rank(series, &xi.values, config)?;
    let d = rank.d_hat;
    let covs = thresholded_lag_covs(series, &xi.values, config.max_lag, config.delta1)?;
    let (m1, m2) = m_from_covs(&covs, p, q);
    let projection = project(series, &m1, &m2, d)?;
    let eta = proxy::eta_from_z(&projection.z, config.proxy, config.seed)?;
    let sigma1 = projected_cov_z_eta(
        series,
        &projection.p_hat,
        &projection.q_hat,
        &eta.weight,
        1,
        config.delta2,
    )?;
    let sigma2 = projected_cov_z_eta(
        series,
        &projection.p_hat,
        &projection.q_hat,
        &eta.weight,
        2,
        config.delta2,
    )?;

    let j1 = gram_solve(&sigma1, &(sigma1.transpose() * &sigma2))?;
    let eig = real_eigen(&j1, config.pair_tol)?;
    let s1 = to_complex(&sigma1);
    let mut u = DMatrix::zeros(d, d);
    for (l, pair) in eig.iter().enumerate() {
        u.set_column(l, &unit(&s1 * &pair.vector));
    }
    let (u_inv, u_rank) = pinv_complex(&u);
    if u_rank < d {
        return Err(Error::RankDeficientLoadings {
            rank: u_rank,
            expected: d,
        });
    }
    let s1_t = s1.transpose();
    let mut v = DMatrix::zeros(d, d);
    for l in 0..d {
        v.set_column(l, &unit(&s1_t * u_inv.row(l).transpose()));
    }
    let mut a = to_complex(&projection.p_hat) * u;
    let mut b = to_complex(&projection.q_hat) * v;
    normalize_columns(&mut a);
    normalize_columns(&mut b);

    let eigenvalues: Vec<C64> = eig.iter().map(|e| e.value).collect();
    let mut pairs = pair_conjugates(&eigenvalues, config.pair_tol)?;
    assign_kappa(&mut pairs, &a);
    let factors = recover_factors(series, &a, &b)?;
    let est = CpEstimate {
        method: Method::Refined,
        d_hat: d,
        a,
        b,
        factors,
        eigenvalues,
        pairs,
        rank,
        config: *config,
    };
    let details = RefinedDetails {
        projection,
        xi,
        eta,
        sigma1,
        sigma2,
        j1,
        u_inv,
    };
    Ok((est, details))
}

/// `d̂` from the ratio rule on `M̂₁` (when `p >= q`) or `M̂₂`.
pub fn refined_rank(series: &MatrixSeries, xi: &[f64], config: &EstimatorConfig) -> Result<RankDiagnostics> {
    let (p, q) = (series.p(), series.q());
    let covs = thresholded_lag_covs(series, xi, config.max_lag, config.delta1)?;
    let (m1, m2) = m_from_covs(&covs, p, q);
    let source = select_rank_source(p, q);
    let m = match source {
        RankSource::M2 => &m2,
        _ => &m1,
    };
    let rule = RatioRule {
        c_n: config.c_n,
        alpha: config.alpha,
    };
    estimate_rank(m, rule, p.min(q), source)
}

/// `(SᵀS)⁻¹ rhs` by a Cholesky solve, rejecting ill-conditioned Gram matrices.
pub fn gram_solve(s: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = s.transpose() * s;
    let (vals, _) = sym_eigen_desc(&gram);
    let top = vals.first().copied().unwrap_or(0.0);
    let bottom = vals.last().copied().unwrap_or(0.0);
    let condition = if bottom > 0.0 { top / bottom } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_GRAM_CONDITION {
        return Err(Error::SingularGram { condition });
    }
    let chol = Cholesky::new(gram).ok_or(Error::SingularGram { condition })?;
    Ok(chol.solve(rhs))
}

fn unit(v: DVector<C64>) -> DVector<C64> {
    let norm = v.norm();
    if norm > 0.0 {
        v / C64::new(norm, 0.0)
    } else {
        v
    }
}
