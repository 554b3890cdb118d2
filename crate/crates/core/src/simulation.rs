//! Synthetic CP-model series with AR(1) factors, and single Monte Carlo trials.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::direct::direct_rank;
use crate::error::{Error, Result};
use crate::estimate::{EstimatorConfig, Method};
use crate::metrics::rho2;
use crate::proxy;
use crate::refined::refined_rank;
use crate::series::{MatrixSeries, MIN_LENGTH};

/// ChaCha stream used for the data-generating process.
pub const DGP_STREAM: u64 = 2;
/// Loadings whose smallest-to-largest singular value ratio is at or below
/// this are redrawn.
pub const RANK_TOLERANCE: f64 = 1e-8;
pub const MAX_DRAWS: usize = 100;
pub const DEFAULT_BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DgpConfig {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub noise: bool,
    pub burn_in: usize,
}

impl DgpConfig {
    pub fn new(p: usize, q: usize, d: usize, n: usize, seed: u64) -> Self {
        Self {
            p,
            q,
            d,
            n,
            seed,
            noise: true,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d >= self.p.min(self.q) {
            return Err(Error::InvalidConfig(alloc::format!(
                "need 1 <= d < min(p, q), got d={} for {}x{}",
                self.d,
                self.p,
                self.q
            )));
        }
        if self.n < MIN_LENGTH {
            return Err(Error::TooShort {
                needed: MIN_LENGTH,
                got: self.n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `p x d`, unit columns.
    pub a: DMatrix<f64>,
    /// `q x d`, unit columns.
    pub b: DMatrix<f64>,
    /// `n x d`, `x_ℓ = |a*_ℓ| |b*_ℓ| x̃_ℓ`.
    pub factors: DMatrix<f64>,
    pub ar_coefficients: Vec<f64>,
}

/// `Y_t = Σ_ℓ x̃_{t,ℓ} a*_ℓ b*_ℓᵀ + ε_t` with Uniform[-3, 3] loadings, AR(1)
/// factors with coefficients uniform on `[-0.95, -0.6] ∪ [0.6, 0.95]` and
/// standard normal innovations (started at 0, first `burn_in` values
/// dropped), and standard normal noise when enabled.
pub fn generate_dgp(config: &DgpConfig) -> Result<(MatrixSeries, GroundTruth)> {
    config.validate()?;
    let DgpConfig { p, q, d, n, .. } = *config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(DGP_STREAM);
    let loading = Uniform::new_inclusive(-3.0, 3.0).expect("valid bounds");
    let mut drawn = None;
    for _ in 0..MAX_DRAWS {
        let a = DMatrix::from_fn(p, d, |_, _| loading.sample(&mut rng));
        let b = DMatrix::from_fn(q, d, |_, _| loading.sample(&mut rng));
        if full_rank(&a) && full_rank(&b) {
            drawn = Some((a, b));
            break;
        }
    }
    let (a_star, b_star) = drawn.ok_or(Error::ConstructionFailure { attempts: MAX_DRAWS })?;

    let magnitude = Uniform::new_inclusive(0.6, 0.95).expect("valid bounds");
    let ar_coefficients: Vec<f64> = (0..d)
        .map(|_| {
            let m = magnitude.sample(&mut rng);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    let mut x_tilde = DMatrix::zeros(n, d);
    let mut state = alloc::vec![0.0f64; d];
    for t in 0..config.burn_in + n {
        for (l, x) in state.iter_mut().enumerate() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *x = ar_coefficients[l] * *x + e;
        }
        if t >= config.burn_in {
            for (l, x) in state.iter().enumerate() {
                x_tilde[(t - config.burn_in, l)] = *x;
            }
        }
    }

    let mut slices = Vec::with_capacity(n);
    for t in 0..n {
        let mut y = DMatrix::zeros(p, q);
        for l in 0..d {
            y += a_star.column(l) * b_star.column(l).transpose() * x_tilde[(t, l)];
        }
        if config.noise {
            for v in y.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += e;
            }
        }
        slices.push(y);
    }
    let series = MatrixSeries::new(slices)?;

    let mut a = a_star.clone();
    let mut b = b_star.clone();
    let mut factors = x_tilde;
    for l in 0..d {
        let na = a_star.column(l).norm();
        let nb = b_star.column(l).norm();
        a.column_mut(l).unscale_mut(na);
        b.column_mut(l).unscale_mut(nb);
        factors.column_mut(l).scale_mut(na * nb);
    }
    Ok((
        series,
        GroundTruth {
            a,
            b,
            factors,
            ar_coefficients,
        },
    ))
}

fn full_rank(m: &DMatrix<f64>) -> bool {
    let s = SVD::new(m.clone(), false, false).singular_values;
    let max = s.max();
    let min = s.min();
    max > 0.0 && min / max > RANK_TOLERANCE
}

/// Seed of replication `rep` under `master`, independent of execution order.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    splitmix64(master ^ splitmix64(rep.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One grid cell `(p, q, d, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub n: usize,
}

impl Cell {
    pub fn dgp(&self, seed: u64) -> DgpConfig {
        DgpConfig::new(self.p, self.q, self.d, self.n, seed)
    }
}

/// `d̂` for replication `rep` of `cell`; only the rank-selection step runs.
pub fn rank_trial(cell: Cell, method: Method, config: &EstimatorConfig, master: u64, rep: u64) -> Result<usize> {
    let seed = replication_seed(master, rep);
    let (series, _) = generate_dgp(&cell.dgp(seed))?;
    let xi = proxy::xi(&series, config.proxy, config.seed)?;
    let rank = match method {
        Method::Direct => direct_rank(&series, &xi.values, config)?,
        Method::Refined => refined_rank(&series, &xi.values, config)?,
    };
    Ok(rank.d_hat)
}

/// `(ρ²(A, Â), ρ²(B, B̂))` for replication `rep` of `cell`.
pub fn accuracy_trial(
    cell: Cell,
    method: Method,
    config: &EstimatorConfig,
    noise: bool,
    master: u64,
    rep: u64,
) -> Result<(f64, f64)> {
    let seed = replication_seed(master, rep);
    let dgp = DgpConfig {
        noise,
        ..cell.dgp(seed)
    };
    let (series, truth) = generate_dgp(&dgp)?;
    let est = crate::estimate(&series, method, config)?;
    Ok((rho2(&truth.a, &est.a), rho2(&truth.b, &est.b)))
}
