//! Monte Carlo benchmarks over a grid of `(p, q, d, n)` cells.
//!
//! Replication `r` of every cell uses the DGP seed
//! `replication_seed(master, r)`, so results do not depend on how the work
//! is spread over threads. Failed replications are counted, not fatal.

use std::io::Write;
use std::path::Path;

use mtcp_core::simulation::{accuracy_trial, rank_trial, Cell};
use mtcp_core::{EstimatorConfig, Method};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses lines `p,q,d,n`. Blank lines, `#` comments and a `p,q,d,n`
/// header are skipped; an empty grid is an error.
pub fn parse_grid(text: &str) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields == ["p", "q", "d", "n"] {
            continue;
        }
        let bad = || Error::Grid(format!("line {}: expected p,q,d,n, got {raw:?}", idx + 1));
        if fields.len() != 4 {
            return Err(bad());
        }
        let v: Vec<usize> = fields
            .iter()
            .map(|f| f.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let cell = Cell {
            p: v[0],
            q: v[1],
            d: v[2],
            n: v[3],
        };
        cell.dgp(0)
            .validate()
            .map_err(|e| Error::Grid(format!("line {}: {e}", idx + 1)))?;
        cells.push(cell);
    }
    if cells.is_empty() {
        return Err(Error::Grid("no cells".into()));
    }
    Ok(cells)
}

pub fn load_grid(path: &Path) -> Result<Vec<Cell>> {
    parse_grid(&std::fs::read_to_string(path).map_err(Error::io(path))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub reps: usize,
    pub seed: u64,
    pub estimator: EstimatorConfig,
    /// Observation noise in the DGP (accuracy suite only).
    pub noise: bool,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

impl BenchConfig {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            reps,
            seed,
            estimator: EstimatorConfig::default(),
            noise: true,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub n: usize,
    /// Share of replications with `d̂ = d`, in `[0, 1]`.
    pub frequency: f64,
    pub hits: usize,
    pub failures: usize,
    pub reps: usize,
    pub seed: u64,
    pub method: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub proxy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub n: usize,
    pub mean_rho2_a: f64,
    pub sd_rho2_a: f64,
    pub mean_rho2_b: f64,
    pub sd_rho2_b: f64,
    /// Replications that produced an estimate; the moments use only these.
    pub successes: usize,
    pub failures: usize,
    pub reps: usize,
    pub seed: u64,
    pub method: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub proxy: String,
    pub noise: bool,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Core(mtcp_core::Error::InvalidConfig(format!("thread pool: {e}"))))
}

/// Frequency of `d̂ = d` for every cell and method.
pub fn run_rank_benchmark(grid: &[Cell], methods: &[Method], config: &BenchConfig) -> Result<Vec<RankRow>> {
    config.estimator.validate()?;
    let pool = pool(config.jobs)?;
    let mut rows = Vec::with_capacity(grid.len() * methods.len());
    for &cell in grid {
        for &method in methods {
            let outcomes: Vec<Option<usize>> = pool.install(|| {
                (0..config.reps)
                    .into_par_iter()
                    .map(|rep| rank_trial(cell, method, &config.estimator, config.seed, rep as u64).ok())
                    .collect()
            });
            let hits = outcomes.iter().filter(|o| **o == Some(cell.d)).count();
            let failures = outcomes.iter().filter(|o| o.is_none()).count();
            log::info!("rank {cell:?} {method}: {hits}/{} ({failures} failed)", config.reps);
            rows.push(RankRow {
                p: cell.p,
                q: cell.q,
                d: cell.d,
                n: cell.n,
                frequency: if config.reps == 0 {
                    0.0
                } else {
                    hits as f64 / config.reps as f64
                },
                hits,
                failures,
                reps: config.reps,
                seed: config.seed,
                method: method.to_string(),
                k: config.estimator.max_lag,
                proxy: config.estimator.proxy.to_string(),
            });
        }
    }
    Ok(rows)
}

/// Mean and standard deviation of `ρ²(A, Â)` and `ρ²(B, B̂)` for every cell
/// and method.
pub fn run_accuracy_benchmark(grid: &[Cell], methods: &[Method], config: &BenchConfig) -> Result<Vec<AccuracyRow>> {
    config.estimator.validate()?;
    let pool = pool(config.jobs)?;
    let mut rows = Vec::with_capacity(grid.len() * methods.len());
    for &cell in grid {
        for &method in methods {
            let outcomes: Vec<Option<(f64, f64)>> = pool.install(|| {
                (0..config.reps)
                    .into_par_iter()
                    .map(|rep| {
                        accuracy_trial(cell, method, &config.estimator, config.noise, config.seed, rep as u64).ok()
                    })
                    .collect()
            });
            let ok: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
            let (mean_a, sd_a) = mean_sd(ok.iter().map(|r| r.0));
            let (mean_b, sd_b) = mean_sd(ok.iter().map(|r| r.1));
            log::info!("accuracy {cell:?} {method}: mean rho2 A {mean_a:.4e}, B {mean_b:.4e}");
            rows.push(AccuracyRow {
                p: cell.p,
                q: cell.q,
                d: cell.d,
                n: cell.n,
                mean_rho2_a: mean_a,
                sd_rho2_a: sd_a,
                mean_rho2_b: mean_b,
                sd_rho2_b: sd_b,
                successes: ok.len(),
                failures: outcomes.len() - ok.len(),
                reps: config.reps,
                seed: config.seed,
                method: method.to_string(),
                k: config.estimator.max_lag,
                proxy: config.estimator.proxy.to_string(),
                noise: config.noise,
            });
        }
    }
    Ok(rows)
}

/// Sample mean and standard deviation (divisor `r - 1`); NaN when undefined.
pub fn mean_sd(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss / (v.len() - 1) as f64).sqrt())
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let cells = parse_grid("p,q,d,n\n# d = 1 block\n4,4,1,300\n\n 8, 8, 3, 300 \n").unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(
            cells[1],
            Cell {
                p: 8,
                q: 8,
                d: 3,
                n: 300
            }
        );
        for bad in [
            "",
            "# nothing\n",
            "p,q,d,n\n",
            "4,4,1\n",
            "4,4,x,300\n",
            "8,8,9,300\n",
            "4,4,1,300,7\n",
        ] {
            assert_eq!(parse_grid(bad).unwrap_err().name(), "MalformedGrid", "{bad:?}");
        }
    }

    #[test]
    fn mean_sd_examples() {
        let (m, s) = mean_sd([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_sd([2.0].into_iter()).1.is_nan());
    }

    #[test]
    fn frequencies_are_multiples_of_one_over_reps() {
        let grid = [Cell {
            p: 6,
            q: 6,
            d: 2,
            n: 100,
        }];
        let cfg = BenchConfig::new(12, 5);
        let rows = run_rank_benchmark(&grid, &[Method::Direct, Method::Refined], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.frequency * 12.0, r.hits as f64);
            assert!(r.hits + r.failures <= 12);
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let grid = [Cell {
            p: 6,
            q: 5,
            d: 2,
            n: 80,
        }];
        let one = BenchConfig {
            jobs: 1,
            ..BenchConfig::new(8, 11)
        };
        let many = BenchConfig { jobs: 3, ..one };
        assert_eq!(
            run_accuracy_benchmark(&grid, &[Method::Refined], &one).unwrap(),
            run_accuracy_benchmark(&grid, &[Method::Refined], &many).unwrap()
        );
        assert_eq!(
            run_rank_benchmark(&grid, &[Method::Refined], &one).unwrap(),
            run_rank_benchmark(&grid, &[Method::Refined], &many).unwrap()
        );
    }
}
