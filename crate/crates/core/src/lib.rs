//! Estimation and forecasting for matrix-valued time series under a
//! CP-type factor model
//!
//! ```text
//! Y_t = Σ_{ℓ=1}^{d} x_{t,ℓ} a_ℓ b_ℓᵀ + ε_t,
//! ```
//!
//! where `Y_t` is `p x q`, the loadings `a_ℓ`, `b_ℓ` are unit vectors and the
//! factor series `x_{t,ℓ}` carry the serial dependence. Lag cross-covariances
//! against a scalar proxy turn the problem into generalized eigenanalysis.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod covariance;
pub mod direct;
pub mod error;
pub mod estimate;
pub mod factors;
pub mod forecast;
pub mod linalg;
pub mod metrics;
pub mod proxy;
pub mod rank;
pub mod refined;
pub mod series;
pub mod simulation;

pub use direct::direct_estimate;
pub use error::{Error, Result};
pub use estimate::{CpEstimate, EstimatorConfig, Method};
pub use linalg::C64;
pub use proxy::ProxyStrategy;
pub use refined::refined_estimate;
pub use series::MatrixSeries;

/// Runs the estimator selected by `method`.
pub fn estimate(series: &MatrixSeries, method: Method, config: &EstimatorConfig) -> Result<CpEstimate> {
    match method {
        Method::Direct => direct_estimate(series, config),
        Method::Refined => refined_estimate(series, config),
    }
}
