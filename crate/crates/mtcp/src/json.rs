//! JSON documents for estimates and simulated ground truth (`schema_version` 1).
//!
//! Complex matrices are split into `{"re": rows, "im": rows}` so any JSON
//! reader can use them without a complex-number convention.

use mtcp_core::factors::{ConjugatePair, PairMap};
use mtcp_core::rank::{RankDiagnostics, RankSource};
use mtcp_core::simulation::{DgpConfig, GroundTruth};
use mtcp_core::{CpEstimate, EstimatorConfig, Method, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixJson {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        Self {
            re: rows(&m.map(|z| z.re)),
            im: rows(&m.map(|z| z.im)),
        }
    }

    pub fn to_matrix(&self, label: &str) -> Result<DMatrix<C64>> {
        let re = from_rows(&self.re, label)?;
        let im = from_rows(&self.im, label)?;
        if re.shape() != im.shape() {
            return Err(Error::Schema(format!(
                "{label}: re is {:?}, im is {:?}",
                re.shape(),
                im.shape()
            )));
        }
        Ok(DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            C64::new(re[(i, j)], im[(i, j)])
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigJson {
    #[serde(rename = "K")]
    pub k: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub c_n: f64,
    pub alpha: f64,
    pub proxy: String,
    pub seed: u64,
    pub pair_tol: f64,
}

impl ConfigJson {
    pub fn from_config(c: &EstimatorConfig) -> Self {
        Self {
            k: c.max_lag,
            delta1: c.delta1,
            delta2: c.delta2,
            c_n: c.c_n,
            alpha: c.alpha,
            proxy: c.proxy.to_string(),
            seed: c.seed,
            pair_tol: c.pair_tol,
        }
    }

    pub fn to_config(&self) -> Result<EstimatorConfig> {
        Ok(EstimatorConfig {
            max_lag: self.k,
            proxy: self.proxy.parse()?,
            delta1: self.delta1,
            delta2: self.delta2,
            c_n: self.c_n,
            alpha: self.alpha,
            seed: self.seed,
            pair_tol: self.pair_tol,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankJson {
    pub source: String,
    pub eigenvalues: Vec<f64>,
    /// `null` where a ratio is undefined.
    pub ratios: Vec<Option<f64>>,
    pub search_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub schema_version: u32,
    pub method: String,
    pub d_hat: usize,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: ComplexMatrixJson,
    #[serde(rename = "B")]
    pub b: ComplexMatrixJson,
    pub factors: ComplexMatrixJson,
    pub eigenvalues: Vec<ComplexJson>,
    /// `[ℓ, ℓ̃, κ]`, 0-based, `ℓ` the member with positive imaginary part.
    pub pairs: Vec<(usize, usize, i8)>,
    pub reals: Vec<usize>,
    pub rank: RankJson,
    pub config: ConfigJson,
}

impl EstimateJson {
    pub fn from_estimate(est: &CpEstimate) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method: est.method.to_string(),
            d_hat: est.d_hat,
            p: est.p(),
            q: est.q(),
            n: est.factors.nrows(),
            a: ComplexMatrixJson::from_matrix(&est.a),
            b: ComplexMatrixJson::from_matrix(&est.b),
            factors: ComplexMatrixJson::from_matrix(&est.factors),
            eigenvalues: est
                .eigenvalues
                .iter()
                .map(|z| ComplexJson { re: z.re, im: z.im })
                .collect(),
            pairs: est.pairs.pairs.iter().map(|c| (c.index, c.partner, c.kappa)).collect(),
            reals: est.pairs.reals.clone(),
            rank: RankJson {
                source: est.rank.source.to_string(),
                eigenvalues: est.rank.eigenvalues.clone(),
                ratios: est.rank.ratios.iter().map(|r| r.is_finite().then_some(*r)).collect(),
                search_bound: est.rank.search_bound,
            },
            config: ConfigJson::from_config(&est.config),
        }
    }

    pub fn to_estimate(&self) -> Result<CpEstimate> {
        check_version(self.schema_version)?;
        let method: Method = self.method.parse()?;
        let d = self.d_hat;
        let a = self.a.to_matrix("A")?;
        let b = self.b.to_matrix("B")?;
        let factors = self.factors.to_matrix("factors")?;
        let expect = |label: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Schema(format!("{label} is {got:?}, expected {want:?}")))
            }
        };
        expect("A", a.shape(), (self.p, d))?;
        expect("B", b.shape(), (self.q, d))?;
        expect("factors", factors.shape(), (self.n, d))?;
        if self.eigenvalues.len() != d {
            return Err(Error::Schema(format!(
                "{} eigenvalues for d_hat = {d}",
                self.eigenvalues.len()
            )));
        }
        let pairs = PairMap {
            pairs: self
                .pairs
                .iter()
                .map(|&(index, partner, kappa)| ConjugatePair { index, partner, kappa })
                .collect(),
            reals: self.reals.clone(),
        };
        let mut covered: Vec<usize> = pairs.reals.clone();
        for c in &pairs.pairs {
            if c.kappa.abs() != 1 {
                return Err(Error::Schema(format!("kappa {} is not ±1", c.kappa)));
            }
            covered.extend([c.index, c.partner]);
        }
        covered.sort_unstable();
        if covered != (0..d).collect::<Vec<_>>() {
            return Err(Error::Schema("pairs and reals do not partition the columns".into()));
        }
        let source = match self.rank.source.as_str() {
            "M1" => RankSource::M1,
            "M2" => RankSource::M2,
            "K1q" => RankSource::K1q,
            other => return Err(Error::Schema(format!("unknown rank source {other:?}"))),
        };
        let config = self.config.to_config()?;
        Ok(CpEstimate {
            method,
            d_hat: d,
            a,
            b,
            factors,
            eigenvalues: self.eigenvalues.iter().map(|z| C64::new(z.re, z.im)).collect(),
            pairs,
            rank: RankDiagnostics {
                eigenvalues: self.rank.eigenvalues.clone(),
                ratios: self.rank.ratios.iter().map(|r| r.unwrap_or(f64::INFINITY)).collect(),
                d_hat: d,
                source,
                search_bound: self.rank.search_bound,
                c_n: config.c_n,
            },
            config,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthJson {
    pub schema_version: u32,
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub noise: bool,
    pub burn_in: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub factors: Vec<Vec<f64>>,
    pub ar_coefficients: Vec<f64>,
}

impl TruthJson {
    pub fn new(config: &DgpConfig, truth: &GroundTruth) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            p: config.p,
            q: config.q,
            d: config.d,
            n: config.n,
            seed: config.seed,
            noise: config.noise,
            burn_in: config.burn_in,
            a: rows(&truth.a),
            b: rows(&truth.b),
            factors: rows(&truth.factors),
            ar_coefficients: truth.ar_coefficients.clone(),
        }
    }
}

/// Loading matrices stored either real (ground truth) or split complex
/// (estimates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoadingJson {
    Complex(ComplexMatrixJson),
    Real(Vec<Vec<f64>>),
}

impl LoadingJson {
    pub fn to_matrix(&self, label: &str) -> Result<DMatrix<C64>> {
        match self {
            LoadingJson::Complex(m) => m.to_matrix(label),
            LoadingJson::Real(rows) => Ok(from_rows(rows, label)?.map(|x| C64::new(x, 0.0))),
        }
    }
}

/// The loadings of either document type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingsJson {
    pub schema_version: u32,
    #[serde(rename = "A")]
    pub a: LoadingJson,
    #[serde(rename = "B")]
    pub b: LoadingJson,
}

impl LoadingsJson {
    pub fn matrices(&self) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
        check_version(self.schema_version)?;
        Ok((self.a.to_matrix("A")?, self.b.to_matrix("B")?))
    }
}

fn check_version(v: u32) -> Result<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Schema(format!("schema_version {v}, expected {SCHEMA_VERSION}")))
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], label: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Schema(format!("{label}: ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mtcp_core::simulation::generate_dgp;

    #[test]
    fn estimate_round_trip() {
        let (series, _) = generate_dgp(&DgpConfig::new(7, 5, 2, 120, 3)).unwrap();
        let est = mtcp_core::estimate(&series, Method::Refined, &EstimatorConfig::default()).unwrap();
        let text = serde_json::to_string(&EstimateJson::from_estimate(&est)).unwrap();
        let back: EstimateJson = serde_json::from_str(&text).unwrap();
        let est2 = back.to_estimate().unwrap();
        assert_eq!(est2.a, est.a);
        assert_eq!(est2.factors, est.factors);
        assert_eq!(est2.pairs, est.pairs);
        assert_eq!(est2.config, est.config);
        assert_eq!(est2.rank.eigenvalues, est.rank.eigenvalues);
    }

    #[test]
    fn schema_keys() {
        let (series, _) = generate_dgp(&DgpConfig::new(6, 6, 1, 100, 1)).unwrap();
        let est = mtcp_core::estimate(&series, Method::Direct, &EstimatorConfig::default()).unwrap();
        let v = serde_json::to_value(EstimateJson::from_estimate(&est)).unwrap();
        for key in [
            "schema_version",
            "d_hat",
            "method",
            "A",
            "B",
            "factors",
            "eigenvalues",
            "pairs",
            "reals",
            "config",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["A"]["re"].as_array().unwrap().len(), 6);
        assert_eq!(v["config"]["K"], 3);
        assert_eq!(v["method"], "direct");
    }

    #[test]
    fn loadings_from_either_document() {
        let cfg = DgpConfig::new(5, 4, 2, 50, 2);
        let (series, truth) = generate_dgp(&cfg).unwrap();
        let t = serde_json::to_string(&TruthJson::new(&cfg, &truth)).unwrap();
        let (a, _) = serde_json::from_str::<LoadingsJson>(&t).unwrap().matrices().unwrap();
        assert_eq!(a.map(|z| z.re), truth.a);
        let est = mtcp_core::estimate(&series, Method::Refined, &EstimatorConfig::default()).unwrap();
        let e = serde_json::to_string(&EstimateJson::from_estimate(&est)).unwrap();
        let (_, b) = serde_json::from_str::<LoadingsJson>(&e).unwrap().matrices().unwrap();
        assert_eq!(b, est.b);
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let (series, _) = generate_dgp(&DgpConfig::new(6, 6, 1, 100, 1)).unwrap();
        let est = mtcp_core::estimate(&series, Method::Direct, &EstimatorConfig::default()).unwrap();
        let mut doc = EstimateJson::from_estimate(&est);
        doc.schema_version = 2;
        assert_eq!(doc.to_estimate().unwrap_err().name(), "SchemaMismatch");
        let mut doc = EstimateJson::from_estimate(&est);
        doc.p = 7;
        assert_eq!(doc.to_estimate().unwrap_err().name(), "SchemaMismatch");
        let mut doc = EstimateJson::from_estimate(&est);
        doc.reals.clear();
        assert_eq!(doc.to_estimate().unwrap_err().name(), "SchemaMismatch");
    }
}
