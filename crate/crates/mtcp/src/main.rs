//! `mtcp`: simulate, estimate, forecast and benchmark CP factor models of
//! matrix time series.
//!
//! Data goes to stdout (or `--out`), logs to stderr. Exit codes: 0 success,
//! 2 usage, configuration or input errors, 3 estimation failures.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mtcp::bench::{self, BenchConfig};
use mtcp::io::{self as mio, Format};
use mtcp::json::{EstimateJson, LoadingsJson, TruthJson};
use mtcp::Error;
use mtcp_core::factors::{realify, recover_factors};
use mtcp_core::forecast::{fit_models, forecast_matrices, CpForecaster};
use mtcp_core::metrics::{rho2_complex, rolling_forecast_eval, slice_errors, WindowConfig, ZeroForecaster};
use mtcp_core::simulation::{generate_dgp, DgpConfig, DEFAULT_BURN_IN};
use mtcp_core::{EstimatorConfig, Method, ProxyStrategy};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mtcp", version, about = "CP factor models for matrix-valued time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a series from the AR(1) CP model.
    Simulate(SimulateArgs),
    /// Fit a CP model and write the estimate as JSON.
    Estimate(EstimateArgs),
    /// Forecast h steps ahead from a fitted estimate.
    Forecast(ForecastArgs),
    /// Monte Carlo rank-selection or loading-accuracy benchmark.
    Benchmark(BenchmarkArgs),
    /// Loading error between two JSON documents, or RMSE/MAE between two series.
    Evaluate(EvaluateArgs),
    /// Impute missing entries and standardize every component series.
    Preprocess(PreprocessArgs),
    /// Rolling-origin forecast evaluation against the zero forecast.
    Rolling(RollingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Rank,
    Accuracy,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    q: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    noise: Switch,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Series output (mts-text); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ground-truth JSON output.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Inferred from the extension when absent (.csv is csv-long).
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long, default_value_t = Method::Refined)]
    method: Method,
    /// Lags summed into M1 and M2.
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = ProxyStrategy::Pca)]
    proxy: ProxyStrategy,
    #[arg(long, default_value_t = 0.0)]
    delta1: f64,
    #[arg(long, default_value_t = 0.0)]
    delta2: f64,
    #[arg(long = "cn", default_value_t = 0.0)]
    c_n: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            max_lag: self.k,
            proxy: self.proxy,
            delta1: self.delta1,
            delta2: self.delta2,
            c_n: self.c_n,
            alpha: self.alpha,
            seed: self.seed,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Estimate JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    h: u64,
    #[arg(long, default_value_t = mtcp_core::forecast::DEFAULT_P_MAX)]
    pmax: usize,
    /// Forecast slices (mts-text); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Lines of p,q,d,n.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repeat to compare methods.
    #[arg(long = "method", default_value = "refined")]
    methods: Vec<Method>,
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = ProxyStrategy::Pca)]
    proxy: ProxyStrategy,
    #[arg(long, default_value_t = 0.0)]
    delta1: f64,
    #[arg(long, default_value_t = 0.0)]
    delta2: f64,
    #[arg(long = "cn", default_value_t = 0.0)]
    c_n: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "on")]
    noise: Switch,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Truth or estimate JSON.
    #[arg(long, requires = "estimate", conflicts_with_all = ["actual", "fitted"])]
    truth: Option<PathBuf>,
    #[arg(long, requires = "truth")]
    estimate: Option<PathBuf>,
    /// Series in mts-text.
    #[arg(long, requires = "fitted")]
    actual: Option<PathBuf>,
    #[arg(long, requires = "actual")]
    fitted: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Standardized series (mts-text); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON with the means and standard deviations used.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct RollingArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 5)]
    windows: usize,
    /// Defaults to n - windows.
    #[arg(long)]
    window_len: Option<usize>,
    #[arg(long, default_value_t = 1)]
    h: usize,
    #[arg(long, default_value_t = mtcp_core::forecast::DEFAULT_P_MAX)]
    pmax: usize,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

impl Failure {
    fn usage(error: impl Into<Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }

    /// Exit 3, except configuration errors which are usage errors.
    fn estimation(error: impl Into<Error>) -> Self {
        let error = error.into();
        let code = match &error {
            Error::Core(mtcp_core::Error::InvalidConfig(_)) => 2,
            _ => 3,
        };
        Self { code, error }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Forecast(a) => forecast(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Rolling(a) => rolling(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.error.name(), f.error);
            ExitCode::from(f.code)
        }
    }
}

fn simulate(a: SimulateArgs) -> CliResult {
    let cfg = DgpConfig {
        noise: a.noise.on(),
        burn_in: a.burn_in,
        ..DgpConfig::new(a.p, a.q, a.d, a.n, a.seed)
    };
    cfg.validate().map_err(Failure::usage)?;
    let (series, truth) = generate_dgp(&cfg).map_err(Failure::estimation)?;
    write_output(a.out.as_deref(), |w| mio::write_mts(w, &series))?;
    if let Some(path) = &a.truth {
        write_json(Some(path), &TruthJson::new(&cfg, &truth))?;
    }
    Ok(())
}

fn load_complete(input: &InputArgs) -> Result<mtcp_core::MatrixSeries, Failure> {
    let loaded = mio::load_series(&input.input, input.format).map_err(Failure::usage)?;
    if loaded.mask.count() > 0 {
        return Err(Failure::usage(mtcp_core::Error::InvalidConfig(format!(
            "{} entries are missing; run `mtcp preprocess` first",
            loaded.mask.count()
        ))));
    }
    Ok(loaded.series)
}

fn estimate(a: EstimateArgs) -> CliResult {
    let series = load_complete(&a.input)?;
    let config = a.estimator.config();
    config.validate().map_err(Failure::usage)?;
    let est = mtcp_core::estimate(&series, a.estimator.method, &config).map_err(Failure::estimation)?;
    log::info!("d_hat = {} ({})", est.d_hat, est.method);
    write_json(a.out.as_deref(), &EstimateJson::from_estimate(&est))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let file = File::open(path).map_err(|e| Failure::usage(Error::io(path)(e)))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Failure::usage(Error::Schema(format!("{}: {e}", path.display()))))
}

fn forecast(a: ForecastArgs) -> CliResult {
    let series = load_complete(&a.input)?;
    let doc: EstimateJson = read_json(&a.estimate)?;
    let mut est = doc.to_estimate().map_err(Failure::usage)?;
    if (est.p(), est.q()) != (series.p(), series.q()) {
        return Err(Failure::usage(Error::Schema(format!(
            "estimate is for {}x{} slices, series is {}x{}",
            est.p(),
            est.q(),
            series.p(),
            series.q()
        ))));
    }
    est.factors = recover_factors(&series, &est.a, &est.b).map_err(Failure::estimation)?;
    let realified = realify(&est).map_err(Failure::estimation)?;
    let models = fit_models(&realified, a.pmax).map_err(Failure::estimation)?;
    for (k, m) in models.iter().enumerate() {
        log::info!("series {k}: AR({}) aic {:.3}", m.order, m.aic);
    }
    let out = forecast_matrices(&est, &models, a.h as usize).map_err(Failure::estimation)?;
    write_output(a.out.as_deref(), |w| mio::write_mts_slices(w, &out.matrices))
}

fn benchmark(a: BenchmarkArgs) -> CliResult {
    let grid = bench::load_grid(&a.grid).map_err(Failure::usage)?;
    let config = BenchConfig {
        reps: a.reps,
        seed: a.seed,
        estimator: EstimatorConfig {
            max_lag: a.k,
            proxy: a.proxy,
            delta1: a.delta1,
            delta2: a.delta2,
            c_n: a.c_n,
            alpha: a.alpha,
            ..EstimatorConfig::default()
        },
        noise: a.noise.on(),
        jobs: a.jobs,
    };
    config.estimator.validate().map_err(Failure::usage)?;
    let mut buf = Vec::new();
    match a.suite {
        Suite::Rank => {
            let rows = bench::run_rank_benchmark(&grid, &a.methods, &config).map_err(Failure::estimation)?;
            bench::write_csv(&rows, &mut buf).map_err(Failure::usage)?;
        }
        Suite::Accuracy => {
            let rows = bench::run_accuracy_benchmark(&grid, &a.methods, &config).map_err(Failure::estimation)?;
            bench::write_csv(&rows, &mut buf).map_err(Failure::usage)?;
        }
    }
    write_output(a.out.as_deref(), |w| w.write_all(&buf))
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    match (a.truth, a.estimate, a.actual, a.fitted) {
        (Some(truth), Some(estimate), None, None) => {
            let (ta, tb) = read_json::<LoadingsJson>(&truth)?.matrices().map_err(Failure::usage)?;
            let (ea, eb) = read_json::<LoadingsJson>(&estimate)?
                .matrices()
                .map_err(Failure::usage)?;
            if ta.nrows() != ea.nrows() || tb.nrows() != eb.nrows() {
                return Err(Failure::usage(Error::Schema(format!(
                    "loadings have {}/{} rows in the truth and {}/{} in the estimate",
                    ta.nrows(),
                    tb.nrows(),
                    ea.nrows(),
                    eb.nrows()
                ))));
            }
            let report = json!({ "rho2_A": rho2_complex(&ta, &ea), "rho2_B": rho2_complex(&tb, &eb) });
            write_json(None, &report)
        }
        (None, None, Some(actual), Some(fitted)) => {
            let read = |p: &Path| -> Result<Vec<_>, Failure> {
                let file = File::open(p).map_err(|e| Failure::usage(Error::io(p)(e)))?;
                mio::read_mts_slices(BufReader::new(file)).map_err(Failure::usage)
            };
            let (rmse, mae) = slice_errors(&read(&actual)?, &read(&fitted)?).map_err(Failure::usage)?;
            write_json(None, &json!({ "rmse": rmse, "mae": mae }))
        }
        _ => Err(Failure::usage(mtcp_core::Error::InvalidConfig(
            "give --truth with --estimate, or --actual with --fitted".into(),
        ))),
    }
}

fn preprocess(a: PreprocessArgs) -> CliResult {
    let loaded = mio::load_series(&a.input.input, a.input.format).map_err(Failure::usage)?;
    let standardized = mtcp::preprocess(&loaded).map_err(Failure::estimation)?;
    write_output(a.out.as_deref(), |w| mio::write_mts(w, &standardized.series))?;
    if let Some(path) = &a.params {
        let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().cloned().collect()).collect()
        };
        let doc = json!({
            "schema_version": mtcp::json::SCHEMA_VERSION,
            "imputed": loaded.mask.count(),
            "means": rows(&standardized.means),
            "std_devs": rows(&standardized.std_devs),
        });
        write_json(Some(path), &doc)?;
    }
    Ok(())
}

fn rolling(a: RollingArgs) -> CliResult {
    let series = load_complete(&a.input)?;
    let config = a.estimator.config();
    config.validate().map_err(Failure::usage)?;
    let window = WindowConfig {
        windows: a.windows,
        window_len: a.window_len,
    };
    let forecaster = CpForecaster {
        method: a.estimator.method,
        config,
        p_max: a.pmax,
    };
    let usage_or_fit = |e: mtcp_core::Error| match e {
        mtcp_core::Error::WindowTooLong(_) => Failure::usage(e),
        other => Failure::estimation(other),
    };
    let eval = rolling_forecast_eval(&series, window, &forecaster, a.h).map_err(usage_or_fit)?;
    let zero = rolling_forecast_eval(&series, window, &ZeroForecaster, a.h).map_err(usage_or_fit)?;
    let report = json!({
        "schema_version": mtcp::json::SCHEMA_VERSION,
        "h": a.h,
        "targets": eval.targets.iter().map(|t| t + 1).collect::<Vec<_>>(),
        "rrmse": eval.rrmse,
        "rmae": eval.rmae,
        "zero_rrmse": zero.rrmse,
        "zero_rmae": zero.rmae,
    });
    write_json(None, &report)
}

fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
    let result = match path {
        Some(p) => File::create(p).and_then(|file| {
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| Failure::usage(Error::io(path.unwrap_or(Path::new("<stdout>")))(e)))
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> CliResult {
    write_output(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}
