//! Loading-recovery error and forecast accuracy.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{to_complex, C64};
use crate::series::MatrixSeries;

/// `ρ²(A, Â) = max_ℓ min_j (1 - |â_jᴴ a_ℓ|²)` for a real truth.
pub fn rho2(truth: &DMatrix<f64>, estimate: &DMatrix<C64>) -> f64 {
    rho2_complex(&to_complex(truth), estimate)
}

/// `ρ²` for a complex truth. Columns of both arguments are renormalized.
pub fn rho2_complex(truth: &DMatrix<C64>, estimate: &DMatrix<C64>) -> f64 {
    if truth.ncols() == 0 {
        return 0.0;
    }
    if estimate.ncols() == 0 || truth.nrows() != estimate.nrows() {
        return 1.0;
    }
    let unit = |m: &DMatrix<C64>| -> Vec<_> {
        m.column_iter()
            .map(|c| {
                let n = c.norm();
                if n > 0.0 {
                    c / C64::new(n, 0.0)
                } else {
                    c.into_owned()
                }
            })
            .collect()
    };
    let truth = unit(truth);
    let est = unit(estimate);
    let mut worst: f64 = 0.0;
    for a in &truth {
        let best = est
            .iter()
            .map(|e| 1.0 - e.dotc(a).norm_sqr())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    worst.clamp(0.0, 1.0)
}

/// Entrywise `(RMSE, MAE)` over all `p·q·n` entries.
pub fn fit_errors(actual: &MatrixSeries, fitted: &MatrixSeries) -> Result<(f64, f64)> {
    slice_errors(actual.slices(), fitted.slices())
}

/// [`fit_errors`] on bare slice lists, which may be shorter than a series.
pub fn slice_errors(actual: &[DMatrix<f64>], fitted: &[DMatrix<f64>]) -> Result<(f64, f64)> {
    let shape = |s: &[DMatrix<f64>]| {
        (
            s.first().map_or(0, |m| m.nrows()),
            s.first().map_or(0, |m| m.ncols()),
            s.len(),
        )
    };
    let uniform = |s: &[DMatrix<f64>]| s.iter().all(|m| m.shape() == s[0].shape());
    if shape(actual) != shape(fitted) || !uniform(actual) || !uniform(fitted) {
        let (a, f) = (shape(actual), shape(fitted));
        return Err(Error::ShapeMismatch(alloc::format!(
            "actual is {}x{}x{}, fitted is {}x{}x{}",
            a.0,
            a.1,
            a.2,
            f.0,
            f.1,
            f.2
        )));
    }
    Ok(errors(actual.iter().zip(fitted)))
}

fn errors<'a>(pairs: impl Iterator<Item = (&'a DMatrix<f64>, &'a DMatrix<f64>)>) -> (f64, f64) {
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut count = 0usize;
    for (a, f) in pairs {
        for (x, y) in a.iter().zip(f.iter()) {
            let e = y - x;
            sq += e * e;
            abs += e.abs();
            count += 1;
        }
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    ((sq / count as f64).sqrt(), abs / count as f64)
}

/// Rolling-origin layout: `windows` targets at 1-based times
/// `window_len + s`, `s = 1..=windows`. The `h`-step forecast for target
/// `window_len + s` is fitted on times `s ..= window_len + s - h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub windows: usize,
    /// Defaults to `n - windows`.
    pub window_len: Option<usize>,
}

impl WindowConfig {
    pub fn new(windows: usize) -> Self {
        Self {
            windows,
            window_len: None,
        }
    }
}

/// Anything producing an `h`-step-ahead matrix forecast from a training sample.
pub trait Forecaster {
    fn forecast(&self, train: &MatrixSeries, h: usize) -> Result<DMatrix<f64>>;
}

/// Always forecasts the zero matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForecaster;

impl Forecaster for ZeroForecaster {
    fn forecast(&self, train: &MatrixSeries, _h: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(train.p(), train.q()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingEval {
    pub rrmse: f64,
    pub rmae: f64,
    /// 0-based indices of the forecast targets.
    pub targets: Vec<usize>,
    pub forecasts: Vec<DMatrix<f64>>,
}

/// Rolling `h`-step forecast evaluation; see [`WindowConfig`] for the layout.
pub fn rolling_forecast_eval<F: Forecaster + ?Sized>(
    series: &MatrixSeries,
    window: WindowConfig,
    forecaster: &F,
    h: usize,
) -> Result<RollingEval> {
    let n = series.n();
    if window.windows == 0 || h == 0 {
        return Err(Error::InvalidConfig("need at least one window and h >= 1".into()));
    }
    let too_long = || {
        Error::WindowTooLong(alloc::format!(
            "{} windows do not fit in {n} observations",
            window.windows
        ))
    };
    let len = match window.window_len {
        Some(l) => l,
        None => n.checked_sub(window.windows).ok_or_else(too_long)?,
    };
    if len + window.windows > n {
        return Err(too_long());
    }
    if len < h + crate::series::MIN_LENGTH - 1 {
        return Err(Error::WindowTooLong(alloc::format!(
            "window length {len} leaves fewer than {} training points at horizon {h}",
            crate::series::MIN_LENGTH
        )));
    }
    let mut targets = Vec::with_capacity(window.windows);
    let mut forecasts = Vec::with_capacity(window.windows);
    for s in 1..=window.windows {
        let target = len + s - 1;
        let train = series.window(s - 1, len - h + 1)?;
        forecasts.push(forecaster.forecast(&train, h)?);
        targets.push(target);
    }
    let (rrmse, rmae) = errors(targets.iter().map(|t| series.slice(*t)).zip(forecasts.iter()));
    Ok(RollingEval {
        rrmse,
        rmae,
        targets,
        forecasts,
    })
}
