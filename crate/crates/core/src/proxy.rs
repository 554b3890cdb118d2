//! Scalar proxy series: a linear functional of the observed (or projected)
//! matrices used to form matrix-valued lag covariances.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{fix_sign, sym_eigen_desc};
use crate::series::MatrixSeries;

/// Share of total variance the leading principal components must reach.
pub const PCA_VARIANCE_SHARE: f64 = 0.99;

/// ChaCha stream used for the proxy of the observed series.
pub const XI_STREAM: u64 = 0;
/// ChaCha stream used for the proxy of the projected series.
pub const ETA_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxyStrategy {
    /// Average of the leading principal-component scores.
    #[default]
    Pca,
    /// Projection on a normalized vector of Uniform[0, 1] weights.
    Random,
}

impl fmt::Display for ProxyStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProxyStrategy::Pca => "pca",
            ProxyStrategy::Random => "random",
        })
    }
}

impl FromStr for ProxyStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(ProxyStrategy::Pca),
            "random" => Ok(ProxyStrategy::Random),
            other => Err(Error::InvalidConfig(alloc::format!("unknown proxy strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxySeries {
    pub values: Vec<f64>,
    pub strategy: ProxyStrategy,
    /// Unit-norm direction of the linear functional on `vec(Y_t)`.
    pub weight: DVector<f64>,
    /// `values[t] = scale * weight^T (vec(Y_t) - offset)`; for PCA the offset
    /// is the sample mean and `scale` is the norm of the averaged loadings.
    pub scale: f64,
    /// Number of principal components averaged (1 for the random strategy).
    pub components: usize,
}

/// Proxy from the leading principal components of the `n x pq` data matrix.
pub fn xi_pca(series: &MatrixSeries) -> Result<ProxySeries> {
    pca_proxy(&series.data_matrix())
}

/// Proxy from a seeded Uniform[0, 1] weight vector.
pub fn xi_random(series: &MatrixSeries, seed: u64) -> ProxySeries {
    random_proxy(&series.data_matrix(), seed, XI_STREAM)
}

/// Proxy of the projected `d x d` series, same strategies as for `Y_t`.
pub fn eta_from_z(z: &MatrixSeries, strategy: ProxyStrategy, seed: u64) -> Result<ProxySeries> {
    match strategy {
        ProxyStrategy::Pca => pca_proxy(&z.data_matrix()),
        ProxyStrategy::Random => Ok(random_proxy(&z.data_matrix(), seed, ETA_STREAM)),
    }
}

/// Dispatches on `strategy` for the observed series.
pub fn xi(series: &MatrixSeries, strategy: ProxyStrategy, seed: u64) -> Result<ProxySeries> {
    match strategy {
        ProxyStrategy::Pca => xi_pca(series),
        ProxyStrategy::Random => Ok(xi_random(series, seed)),
    }
}

fn random_proxy(data: &DMatrix<f64>, seed: u64, stream: u64) -> ProxySeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dim = data.ncols();
    let mut h = DVector::from_fn(dim, |_, _| rng.random::<f64>());
    let norm = h.norm();
    if norm > 0.0 {
        h /= norm;
    } else {
        h[0] = 1.0;
    }
    let values = (data * &h).iter().cloned().collect();
    ProxySeries {
        values,
        strategy: ProxyStrategy::Random,
        weight: h,
        scale: 1.0,
        components: 1,
    }
}

fn pca_proxy(data: &DMatrix<f64>) -> Result<ProxySeries> {
    let (n, dim) = data.shape();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let raw_scale = data.iter().map(|x| x * x).sum::<f64>() / (n * dim) as f64;

    // Principal axes from whichever Gram matrix is smaller.
    let wide = dim > n;
    let (variances, vecs) = if wide {
        sym_eigen_desc(&(&centered * centered.transpose()))
    } else {
        sym_eigen_desc(&(centered.transpose() * &centered))
    };
    let variances: Vec<f64> = variances.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = variances.iter().sum();
    if total <= 1e-24 * (1.0 + raw_scale) * (n * dim) as f64 {
        return Err(Error::DegenerateCovariance);
    }
    let mut acc = 0.0;
    let mut m = 0;
    for v in &variances {
        acc += v;
        m += 1;
        if acc >= PCA_VARIANCE_SHARE * total {
            break;
        }
    }
    let m = m.min(variances.iter().filter(|v| **v > 0.0).count()).max(1);
    let loadings = if wide {
        let mut loadings = DMatrix::zeros(dim, m);
        for (k, lambda) in variances.iter().enumerate().take(m) {
            let mut v = centered.transpose() * vecs.column(k);
            v /= lambda.sqrt();
            fix_sign(&mut v);
            loadings.set_column(k, &v);
        }
        loadings
    } else {
        vecs.columns(0, m).into_owned()
    };
    let mut functional = DVector::zeros(dim);
    for k in 0..m {
        functional += loadings.column(k);
    }
    functional /= m as f64;
    let values = (&centered * &functional).iter().cloned().collect();
    let scale = functional.norm();
    let weight = if scale > 0.0 { functional / scale } else { functional };
    Ok(ProxySeries {
        values,
        strategy: ProxyStrategy::Pca,
        weight,
        scale,
        components: m,
    })
}
