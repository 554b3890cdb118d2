//! Univariate AR models for the realified factor series and matrix forecasts.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimate::{CpEstimate, EstimatorConfig, Method};
use crate::factors::{realify, Realified};
use crate::linalg::C64;
use crate::metrics::Forecaster;
use crate::series::MatrixSeries;

/// Default largest AR order tried.
pub const DEFAULT_P_MAX: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub order: usize,
    pub intercept: f64,
    /// `φ_1..φ_order`.
    pub coefficients: Vec<f64>,
    pub sigma2: f64,
    pub aic: f64,
}

impl ArModel {
    /// Recursive `h`-step forecasts following the end of `history`.
    pub fn forecast(&self, history: &[f64], h: usize) -> Vec<f64> {
        let mut path: Vec<f64> = history.to_vec();
        for _ in 0..h {
            let t = path.len();
            let mut next = self.intercept;
            for (i, phi) in self.coefficients.iter().enumerate() {
                next += phi * path[t - 1 - i];
            }
            path.push(next);
        }
        path.split_off(history.len())
    }
}

/// Conditional least squares for orders `0..=p_max` on the common sample
/// `t = p_max..n`, scored by `AIC = T·ln σ̂² + 2(k+1)` with `T = n - p_max`.
pub fn fit_ar_aic(x: &[f64], p_max: usize) -> Result<ArModel> {
    let n = x.len();
    if n <= p_max + 2 {
        return Err(Error::TooShort {
            needed: p_max + 3,
            got: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var <= 1e-28 * (1.0 + mean * mean) {
        return Err(Error::ZeroVariance { i: 0, j: 0 });
    }
    let t_eff = n - p_max;
    let y = DVector::from_fn(t_eff, |r, _| x[p_max + r]);
    let mut best: Option<ArModel> = None;
    for order in 0..=p_max {
        let design = DMatrix::from_fn(t_eff, order + 1, |r, c| if c == 0 { 1.0 } else { x[p_max + r - c] });
        let beta = design
            .clone()
            .svd(true, true)
            .solve(&y, 1e-12)
            .map_err(|e| Error::InvalidConfig(alloc::format!("AR least squares failed: {e}")))?;
        let resid = &y - &design * &beta;
        let sigma2 = resid.norm_squared() / t_eff as f64;
        let aic = if sigma2 > 0.0 {
            t_eff as f64 * sigma2.ln() + 2.0 * (order + 1) as f64
        } else {
            f64::NEG_INFINITY
        };
        let model = ArModel {
            order,
            intercept: beta[0],
            coefficients: beta.iter().skip(1).cloned().collect(),
            sigma2,
            aic,
        };
        if best.as_ref().is_none_or(|b| model.aic < b.aic) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least order 0 is fitted"))
}

/// One AR model per realified series.
pub fn fit_models(realified: &Realified, p_max: usize) -> Result<Vec<ArModel>> {
    realified.series.iter().map(|s| fit_ar_aic(s, p_max)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    /// `Ŷ_{n+1}, …, Ŷ_{n+h}`.
    pub matrices: Vec<DMatrix<f64>>,
    /// Complex factor forecasts, one row per step.
    pub factors: Vec<Vec<C64>>,
    /// Forecasts of each realified series, one vector per series.
    pub realified: Vec<Vec<f64>>,
}

/// Forecasts `h` steps past the end of the sample the estimate was fitted on.
pub fn forecast_matrices(est: &CpEstimate, models: &[ArModel], h: usize) -> Result<ForecastResult> {
    if h == 0 {
        return Err(Error::InvalidConfig("forecast horizon must be at least 1".into()));
    }
    let realified = realify(est)?;
    if models.len() != realified.series.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} models for {} realified series",
            models.len(),
            realified.series.len()
        )));
    }
    let paths: Vec<Vec<f64>> = models
        .iter()
        .zip(&realified.series)
        .map(|(m, s)| m.forecast(s, h))
        .collect();
    let mut matrices = Vec::with_capacity(h);
    let mut factors = Vec::with_capacity(h);
    for step in 0..h {
        let values: Vec<f64> = paths.iter().map(|p| p[step]).collect();
        let x = realified.recombine(&values);
        let y = est.signal(&x);
        let scale = y.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let magnitude = y.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if magnitude > 1e-8 * (1.0 + scale) {
            return Err(Error::ResidualImaginaryPart {
                column: step,
                magnitude,
            });
        }
        matrices.push(y.map(|z| z.re));
        factors.push(x);
    }
    Ok(ForecastResult {
        matrices,
        factors,
        realified: paths,
    })
}

/// Estimate, realify, fit AR models by AIC and forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpForecaster {
    pub method: Method,
    pub config: EstimatorConfig,
    pub p_max: usize,
}

impl Default for CpForecaster {
    fn default() -> Self {
        Self {
            method: Method::Refined,
            config: EstimatorConfig::default(),
            p_max: DEFAULT_P_MAX,
        }
    }
}

impl Forecaster for CpForecaster {
    fn forecast(&self, train: &MatrixSeries, h: usize) -> Result<DMatrix<f64>> {
        let est = crate::estimate(train, self.method, &self.config)?;
        let models = fit_models(&realify(&est)?, self.p_max)?;
        let mut out = forecast_matrices(&est, &models, h)?;
        Ok(out.matrices.pop().expect("h >= 1"))
    }
}
