//! The estimator configuration and the estimate it produces.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factors::PairMap;
use crate::linalg::C64;
use crate::proxy::ProxyStrategy;
use crate::rank::RankDiagnostics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Rank-reduced lag-1/lag-2 pencil on the smaller dimension.
    Direct,
    /// Projection onto the leading eigenspaces, then a full-rank eigenproblem.
    #[default]
    Refined,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Refined => "refined",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Method::Direct),
            "refined" => Ok(Method::Refined),
            other => Err(Error::InvalidConfig(alloc::format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Number of lags `K` summed into `M̂₁`, `M̂₂` (refined only).
    pub max_lag: usize,
    pub proxy: ProxyStrategy,
    /// Threshold on `Σ̂_{Y,ξ}(k)`.
    pub delta1: f64,
    /// Threshold on `Σ̂_Y̌(k)` (refined only).
    pub delta2: f64,
    pub c_n: f64,
    pub alpha: f64,
    /// Seed for the random-weight proxy.
    pub seed: u64,
    /// Relative tolerance for treating eigenvalues as real / conjugate.
    pub pair_tol: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            max_lag: 3,
            proxy: ProxyStrategy::Pca,
            delta1: 0.0,
            delta2: 0.0,
            c_n: 0.0,
            alpha: 0.5,
            seed: 0,
            pair_tol: 1e-8,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_lag == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        let nonnegative = |x: f64| x >= 0.0;
        if ![self.delta1, self.delta2, self.c_n].into_iter().all(nonnegative) {
            return Err(Error::InvalidConfig("thresholds and c_n must be nonnegative".into()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if self.pair_tol.is_nan() || self.pair_tol <= 0.0 {
            return Err(Error::InvalidConfig("pair tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted CP model `Y_t ≈ Σ_ℓ x̂_{t,ℓ} â_ℓ b̂_ℓᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpEstimate {
    pub method: Method,
    pub d_hat: usize,
    /// `p x d̂`, unit columns.
    pub a: DMatrix<C64>,
    /// `q x d̂`, unit columns.
    pub b: DMatrix<C64>,
    /// `n x d̂` recovered factor series.
    pub factors: DMatrix<C64>,
    pub eigenvalues: Vec<C64>,
    pub pairs: PairMap,
    pub rank: RankDiagnostics,
    pub config: EstimatorConfig,
}

impl CpEstimate {
    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> usize {
        self.b.nrows()
    }

    /// `Σ_ℓ x_ℓ â_ℓ b̂_ℓᵀ` for one vector of factor values.
    pub fn signal(&self, x: &[C64]) -> DMatrix<C64> {
        signal(&self.a, &self.b, x)
    }

    /// Real part of the fitted slice at time `t`.
    pub fn fitted(&self, t: usize) -> DMatrix<f64> {
        let x: Vec<C64> = self.factors.row(t).iter().cloned().collect();
        self.signal(&x).map(|z| z.re)
    }

    /// Largest imaginary modulus of any reconstructed slice, and largest real modulus.
    pub fn reconstruction_imaginary(&self) -> (f64, f64) {
        let mut im: f64 = 0.0;
        let mut re: f64 = 0.0;
        for t in 0..self.factors.nrows() {
            let x: Vec<C64> = self.factors.row(t).iter().cloned().collect();
            for z in self.signal(&x).iter() {
                im = im.max(z.im.abs());
                re = re.max(z.re.abs());
            }
        }
        (im, re)
    }
}

pub fn signal(a: &DMatrix<C64>, b: &DMatrix<C64>, x: &[C64]) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(a.nrows(), b.nrows());
    for (l, xl) in x.iter().enumerate() {
        let al: DVector<C64> = a.column(l).into_owned();
        let bl: DVector<C64> = b.column(l).into_owned();
        out += al * bl.transpose() * *xl;
    }
    out
}

/// Divides every column by its Euclidean norm.
pub(crate) fn normalize_columns(m: &mut DMatrix<C64>) {
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }
}
