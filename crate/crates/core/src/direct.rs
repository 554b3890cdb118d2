//! Direct estimator: a rank-reduced generalized eigenproblem built from the
//! lag-1 and lag-2 cross-covariances with the proxy.
//!
//! With `Σ̂_k = T_δ{Σ̂_{Y,ξ}(k)}` (`p x q`), the pencil is
//! `K̂₂q b = λ K̃₁q b` where `K̂₂q = Σ̂₁ᵀΣ̂₂` and `K̃₁q` keeps the leading `d̂`
//! eigenpairs `(ĉ_j, γ̂_j)` of `K̂₁q = Σ̂₁ᵀΣ̂₁`. It is solved in the basis
//! `Γ̂_d = (γ̂₁..γ̂_d̂)`, which has exactly `d̂` finite eigenvalues.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::covariance::thresholded_lag_covs;
use crate::error::{Error, Result};
use crate::estimate::{CpEstimate, EstimatorConfig, Method};
use crate::factors::{assign_kappa, pair_conjugates, recover_factors};
use crate::linalg::{normalize_phase, pinv_complex, real_eigen, sym_eigen_desc, to_complex, C64};
use crate::proxy;
use crate::rank::{rank_from_spectrum, search_bound, RankDiagnostics, RankSource, CLAMP_RELATIVE};
use crate::series::MatrixSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    /// `K̂₂q`, `q x q`.
    pub k2: DMatrix<f64>,
    /// `K̃₁q`, rank `d̂`.
    pub k1_trunc: DMatrix<f64>,
    pub d_hat: usize,
    /// Leading eigenvectors `γ̂_j` of `K̂₁q`, `q x d̂`.
    pub gamma: DMatrix<f64>,
    /// Leading eigenvalues `ĉ_j`.
    pub c: Vec<f64>,
    /// `T_δ{Σ̂_{Y,ξ}(1)}`, `p x q`.
    pub sigma1: DMatrix<f64>,
}

/// Builds the truncated pencil and selects `d̂` on the spectrum of `K̂₁q`.
pub fn build_pencil(
    series: &MatrixSeries,
    xi: &[f64],
    delta1: f64,
    c_n: f64,
    alpha: f64,
) -> Result<(Pencil, RankDiagnostics)> {
    let covs = thresholded_lag_covs(series, xi, 2, delta1)?;
    let (sigma1, sigma2) = (&covs[0], &covs[1]);
    let k1 = sigma1.transpose() * sigma1;
    let k2 = sigma1.transpose() * sigma2;
    let (eigs, vecs) = sym_eigen_desc(&k1);
    let bound = search_bound(alpha, series.p(), series.q())?;
    let rank = rank_from_spectrum(eigs.clone(), c_n, bound, RankSource::K1q)?;
    let d = rank.d_hat;
    let floor = CLAMP_RELATIVE * eigs[0];
    if eigs[d - 1] <= floor {
        return Err(Error::RankDeficientLoadings {
            rank: eigs.iter().filter(|v| **v > floor).count(),
            expected: d,
        });
    }
    let gamma = vecs.columns(0, d).into_owned();
    let c: Vec<f64> = eigs[..d].to_vec();
    let k1_trunc = &gamma * DMatrix::from_diagonal(&DVector::from_column_slice(&c)) * gamma.transpose();
    Ok((
        Pencil {
            k2,
            k1_trunc,
            d_hat: d,
            gamma,
            c,
            sigma1: sigma1.clone(),
        },
        rank,
    ))
}

/// `d̂` from the ratio rule on the spectrum of `K̂₁q` alone, after the same
/// orientation swap as [`direct_estimate_with_proxy`].
pub fn direct_rank(series: &MatrixSeries, xi: &[f64], config: &EstimatorConfig) -> Result<RankDiagnostics> {
    let transposed;
    let series = if series.p() < series.q() {
        transposed = series.transpose();
        &transposed
    } else {
        series
    };
    let covs = thresholded_lag_covs(series, xi, 1, config.delta1)?;
    let (eigs, _) = sym_eigen_desc(&(covs[0].transpose() * &covs[0]));
    let bound = search_bound(config.alpha, series.p(), series.q())?;
    rank_from_spectrum(eigs, config.c_n, bound, RankSource::K1q)
}

/// The `d̂` finite eigenpairs `(λ_ℓ, b̂^ℓ)` of the truncated pencil, sorted by
/// (real part, imaginary part) descending.
pub fn solve_reduced_gep(pencil: &Pencil, tol: f64) -> Result<Vec<(C64, DVector<C64>)>> {
    let reduced = pencil.gamma.transpose() * &pencil.k2 * &pencil.gamma;
    let reduced = DMatrix::from_fn(pencil.d_hat, pencil.d_hat, |i, j| reduced[(i, j)] / pencil.c[i]);
    let gamma = to_complex(&pencil.gamma);
    let mut out: Vec<(C64, DVector<C64>)> = Vec::with_capacity(pencil.d_hat);
    for pair in real_eigen(&reduced, tol)? {
        let vector = if pair.value.im < 0.0 {
            out.iter()
                .find(|(v, _)| *v == pair.value.conj())
                .map(|(_, b)| b.map(|z| z.conj()))
                .expect("upper member of a conjugate pair sorts first")
        } else {
            let mut b = &gamma * &pair.vector;
            normalize_phase(&mut b);
            b
        };
        out.push((pair.value, vector));
    }
    Ok(out)
}

/// Direct estimate with the proxy chosen by `config.proxy`.
pub fn direct_estimate(series: &MatrixSeries, config: &EstimatorConfig) -> Result<CpEstimate> {
    config.validate()?;
    let xi = proxy::xi(series, config.proxy, config.seed)?;
    direct_estimate_with_proxy(series, &xi.values, config)
}

/// Direct estimate for a given proxy series. When `p < q` the transposed
/// series is estimated and the roles of `A` and `B` are swapped back.
pub fn direct_estimate_with_proxy(series: &MatrixSeries, xi: &[f64], config: &EstimatorConfig) -> Result<CpEstimate> {
    config.validate()?;
    let (a, b, eigenvalues, rank) = if series.p() < series.q() {
        let (a, b, e, r) = loadings(&series.transpose(), xi, config)?;
        (b, a, e, r)
    } else {
        loadings(series, xi, config)?
    };
    let mut pairs = pair_conjugates(&eigenvalues, config.pair_tol)?;
    assign_kappa(&mut pairs, &a);
    let factors = recover_factors(series, &a, &b)?;
    Ok(CpEstimate {
        method: Method::Direct,
        d_hat: rank.d_hat,
        a,
        b,
        factors,
        eigenvalues,
        pairs,
        rank,
        config: *config,
    })
}

type Loadings = (DMatrix<C64>, DMatrix<C64>, Vec<C64>, RankDiagnostics);

fn loadings(series: &MatrixSeries, xi: &[f64], config: &EstimatorConfig) -> Result<Loadings> {
    let (pencil, rank) = build_pencil(series, xi, config.delta1, config.c_n, config.alpha)?;
    let d = pencil.d_hat;
    let eig = solve_reduced_gep(&pencil, config.pair_tol)?;
    let sigma1 = to_complex(&pencil.sigma1);
    let mut a = DMatrix::zeros(series.p(), d);
    for (l, (_, b_up)) in eig.iter().enumerate() {
        a.set_column(l, &unit(&sigma1 * b_up));
    }
    let (a_pinv, a_rank) = pinv_complex(&a);
    if a_rank < d {
        return Err(Error::RankDeficientLoadings {
            rank: a_rank,
            expected: d,
        });
    }
    let sigma1_t = sigma1.transpose();
    let mut b = DMatrix::zeros(series.q(), d);
    for l in 0..d {
        let a_up = a_pinv.row(l).transpose();
        b.set_column(l, &unit(&sigma1_t * a_up));
    }
    let eigenvalues = eig.into_iter().map(|(v, _)| v).collect();
    Ok((a, b, eigenvalues, rank))
}

fn unit(v: DVector<C64>) -> DVector<C64> {
    let norm = v.norm();
    if norm > 0.0 {
        v / C64::new(norm, 0.0)
    } else {
        v
    }
}
