use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lyaplab::dyson::{dyson_histogram, DysonSpec};
use lyaplab::ensembles::{Ensemble, ProductSpec};
use lyaplab::io::{self as lio, Metadata};
use lyaplab::kernels::{
    airy_density, bulk_density, finite_density, grid, soft_density, BulkKernelParams, CurveMeta, DensityCurve,
    QuadratureConfig, SoftGaussian, SoftKernelParams,
};
use lyaplab::lyapunov::{sample_spectra, Method};
use lyaplab::par::{map_indexed, with_threads, Execution};
use lyaplab::stats::{
    band_agreement, compare, local_coordinates, make_histogram, EmpiricalDensity, HistogramConfig, Recentering,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Serialize)]
#[command(name = "lyaplab", version, about = "Lyapunov spectra of random matrix products and their kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Command {
    /// Sample Lyapunov spectra and write them as CSV.
    Simulate(SimulateArgs),
    /// Tabulate an analytic density on a grid.
    Kernel(KernelArgs),
    /// Compare sampled spectra with the bulk kernel.
    Compare(CompareArgs),
    /// Dyson Brownian motion from a picket fence, compared with the bulk kernel.
    Dyson(DysonArgs),
}

#[derive(Args, Serialize)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EnsembleArg {
    Ginibre,
    /// Entries from {−1, 0, 1} + i{−1, 0, 1}, rescaled to unit variance.
    Bernoulli,
    /// Same support without the rescaling.
    BernoulliRaw,
    CorrelatedSum,
    Dmpk,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    QrRefined,
    QrAccumulation,
    HighPrecision,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "ginibre")]
    ensemble: EnsembleArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long, value_enum, default_value = "qr-refined")]
    method: MethodArg,
    /// Coupling of the DMPK step.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Time step of the DMPK step.
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KernelKind {
    Bulk,
    Soft,
    Sine,
    Airy,
    Finite,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GaussianArg {
    Half,
    Full,
}

#[derive(Args, Serialize)]
struct KernelArgs {
    #[arg(value_enum)]
    kind: KernelKind,
    /// `min:max:count`, endpoints included.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta_p: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Gaussian factor of the soft kernel.
    #[arg(long, value_enum, default_value = "half")]
    soft_gaussian: GaussianArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RecenteringArg {
    /// Analytic for Ginibre, fitted otherwise.
    Auto,
    Analytic,
    Fitted,
    None,
}

#[derive(Args, Serialize)]
struct CompareArgs {
    /// CSV written by `simulate`.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 15)]
    j_center: usize,
    #[arg(long, default_value_t = 2)]
    window: usize,
    /// `a·p` of the analytic curve; defaults to `j_center / m`.
    #[arg(long)]
    ap: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    recentering: RecenteringArg,
    #[arg(long, default_value_t = 0.10)]
    tolerance: f64,
    #[arg(long, default_value_t = 0.1)]
    bin_width: f64,
    #[arg(long, default_value_t = 400)]
    bootstrap: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct DysonArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    tau: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0.1)]
    bin_width: f64,
    #[arg(long, default_value_t = 400)]
    bootstrap: usize,
    /// Width of the agreement band in bootstrap errors.
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Fraction of bins that must lie inside the band.
    #[arg(long, default_value_t = 0.95)]
    min_fraction: f64,
    /// Where to write the JSON report; standard error if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

enum Outcome {
    Done,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use lyaplab::Error as E;
    match e.downcast_ref::<E>() {
        Some(
            E::Pole(_)
            | E::Domain { .. }
            | E::Overflow(_)
            | E::NonFinite(_)
            | E::SingularFactor { .. }
            | E::PrecisionInsufficient { .. }
            | E::NonConvergence { .. }
            | E::BranchCrossing { .. }
            | E::ContourSensitivity { .. }
            | E::RankDeficient,
        ) => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let config = serde_json::to_string(cli)?;
    match &cli.command {
        Command::Simulate(a) => with_threads(a.common.threads, || simulate(a, &config)),
        Command::Kernel(a) => with_threads(a.common.threads, || kernel(a, &config)),
        Command::Compare(a) => with_threads(a.common.threads, || compare_cmd(a, &config)),
        Command::Dyson(a) => with_threads(a.common.threads, || dyson(a, &config)),
    }
}

fn base_metadata(config: &str) -> Metadata {
    Metadata::from([
        ("tool".to_string(), format!("lyaplab {VERSION}")),
        ("config".to_string(), config.to_string()),
    ])
}

fn with_output<T>(out: &Option<PathBuf>, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<T>) -> anyhow::Result<T> {
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            let v = f(&mut w)?;
            w.flush()?;
            Ok(v)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            let v = f(&mut w)?;
            w.flush()?;
            Ok(v)
        }
    }
}

fn simulate(a: &SimulateArgs, config: &str) -> anyhow::Result<Outcome> {
    let ensemble = match a.ensemble {
        EnsembleArg::Ginibre => Ensemble::Ginibre,
        EnsembleArg::Bernoulli => Ensemble::Bernoulli { normalize_variance: true },
        EnsembleArg::BernoulliRaw => Ensemble::Bernoulli { normalize_variance: false },
        EnsembleArg::CorrelatedSum => Ensemble::CorrelatedSum,
        EnsembleArg::Dmpk => Ensemble::DmpkStep { gamma: a.gamma, dt: a.dt },
    };
    let method = match a.method {
        MethodArg::QrRefined => Method::QrRefined,
        MethodArg::QrAccumulation => Method::QrAccumulation,
        MethodArg::HighPrecision => Method::HighPrecisionSvd,
    };
    let spec = ProductSpec::new(ensemble, a.n, a.m)?;
    let spectra = sample_spectra(&spec, a.samples, a.common.seed, method, Execution::Parallel)?;
    let mut meta = base_metadata(config);
    meta.insert("ensemble".into(), serde_json::to_string(&ensemble)?);
    with_output(&a.common.out, |w| Ok(lio::write_spectra_csv(w, &meta, &spectra)?))?;
    Ok(Outcome::Done)
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!(lyaplab::Error::InvalidParameter(format!("grid must be min:max:count, got {s:?}")));
    }
    let bad = || lyaplab::Error::InvalidParameter(format!("grid must be min:max:count, got {s:?}"));
    let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(grid(min, max, count)?)
}

fn need<T: Copy>(v: Option<T>, name: &str, kind: &str) -> anyhow::Result<T> {
    match v {
        Some(x) => Ok(x),
        None => bail!(lyaplab::Error::InvalidParameter(format!("--{name} is required for `kernel {kind}`"))),
    }
}

fn tabulate(xs: Vec<f64>, meta: CurveMeta, f: impl Fn(f64) -> lyaplab::Result<f64> + Sync) -> anyhow::Result<DensityCurve> {
    let values = map_indexed(xs.len(), Execution::Parallel, |i| f(xs[i]))
        .into_iter()
        .collect::<lyaplab::Result<Vec<_>>>()?;
    Ok(DensityCurve::new(xs, values, meta)?)
}

fn kernel(a: &KernelArgs, config: &str) -> anyhow::Result<Outcome> {
    let xs = parse_grid(&a.grid)?;
    let quad = QuadratureConfig::default();
    let curve = match a.kind {
        KernelKind::Bulk => {
            let ka = need(a.a, "a", "bulk")?;
            let p = need(a.p, "p", "bulk")?;
            let params = BulkKernelParams::new(ka, p, a.delta_p)?;
            let meta = CurveMeta::new("bulk").with("a", ka).with("p", p).with("delta_p", a.delta_p);
            tabulate(xs, meta, |x| bulk_density(x, &params))?
        }
        KernelKind::Soft => {
            let ka = need(a.a, "a", "soft")?;
            let gaussian = match a.soft_gaussian {
                GaussianArg::Half => SoftGaussian::Half,
                GaussianArg::Full => SoftGaussian::Full,
            };
            let params = SoftKernelParams::with_gaussian(ka, gaussian)?;
            let meta = CurveMeta::new("soft").with("a", ka).with("gaussian", gaussian.coefficient());
            tabulate(xs, meta, |x| soft_density(x, &params, &quad))?
        }
        KernelKind::Sine => tabulate(xs, CurveMeta::new("sine"), |_| Ok(1.0))?,
        KernelKind::Airy => tabulate(xs, CurveMeta::new("airy"), |x| Ok(airy_density(x)))?,
        KernelKind::Finite => {
            let n = need(a.n, "n", "finite")?;
            let m = need(a.m, "m", "finite")?;
            let meta = CurveMeta::new("finite").with("n", n as f64).with("m", m as f64);
            tabulate(xs, meta, |x| finite_density(x, n, m, &quad))?
        }
    };
    let meta = base_metadata(config);
    with_output(&a.common.out, |w| Ok(lio::write_curve_csv(w, &meta, &curve)?))?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct Series {
    centers: Vec<f64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
}

impl Series {
    fn from_histogram(h: &EmpiricalDensity) -> Self {
        Self {
            centers: h.centers(),
            values: h.normalized_values.clone(),
            stderr: h.stderr.clone(),
        }
    }
}

#[derive(Serialize)]
struct CompareReport<'a> {
    sup_norm: f64,
    chi_square: f64,
    dof: usize,
    pass: bool,
    tolerance_used: f64,
    config: serde_json::Value,
    ap: f64,
    recentering: Recentering,
    samples: usize,
    empirical: Series,
    analytic: AnalyticSeries<'a>,
}

#[derive(Serialize)]
struct AnalyticSeries<'a> {
    label: &'a str,
    centers: &'a [f64],
    bin_averages: &'a [f64],
}

fn read_samples(path: &Path) -> anyhow::Result<(Metadata, Vec<lyaplab::lyapunov::LyapunovSpectrum>)> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(lio::read_spectra_csv(BufReader::new(f))?)
}

fn compare_cmd(a: &CompareArgs, config: &str) -> anyhow::Result<Outcome> {
    let (meta, spectra) = read_samples(&a.samples)?;
    let first = match spectra.first() {
        Some(s) => s,
        None => bail!(lyaplab::Error::TooFewSamples { needed: 1, got: 0 }),
    };
    let (n, m) = (first.n, first.m);
    let ensemble: Option<Ensemble> = meta.get("ensemble").and_then(|s| serde_json::from_str(s).ok());
    let recentering = match a.recentering {
        RecenteringArg::Analytic => Recentering::Analytic { a: n as f64 / m as f64 },
        RecenteringArg::Fitted => Recentering::Fitted,
        RecenteringArg::None => Recentering::None,
        RecenteringArg::Auto => match ensemble {
            Some(Ensemble::Ginibre) => Recentering::Analytic { a: n as f64 / m as f64 },
            _ => Recentering::Fitted,
        },
    };
    let ap = a.ap.unwrap_or(a.j_center as f64 / m as f64);
    let values = local_coordinates(&spectra, a.j_center, a.window, recentering)?;
    let half = a.window as f64 + 0.5;
    let cfg = HistogramConfig {
        bin_width: a.bin_width,
        window: Some((-half, half)),
        bootstrap_rounds: a.bootstrap,
        seed: a.common.seed,
    };
    let h = make_histogram(&values, &cfg)?;
    let params = BulkKernelParams::from_ap(ap)?;
    let xs = grid(-half, half, 40 * (2 * a.window + 1) + 1)?;
    let curve = tabulate(xs, CurveMeta::new("bulk").with("ap", ap), |x| bulk_density(x, &params))?;
    let r = compare(&h, &curve, a.tolerance, Some((-(a.window as f64), a.window as f64)))?;
    let report = CompareReport {
        sup_norm: r.sup_norm,
        chi_square: r.chi_square,
        dof: r.dof,
        pass: r.pass,
        tolerance_used: r.tolerance_used,
        config: serde_json::from_str(config)?,
        ap,
        recentering,
        samples: spectra.len(),
        empirical: Series::from_histogram(&h),
        analytic: AnalyticSeries {
            label: "bulk",
            centers: &r.centers,
            bin_averages: &r.analytic,
        },
    };
    with_output(&a.common.out, |w| Ok(lio::write_json(w, &report)?))?;
    eprintln!(
        "sup-norm {:.4} (tolerance {}), chi2/dof {:.3}: {}",
        r.sup_norm,
        r.tolerance_used,
        r.chi_square_per_dof(),
        if r.pass { "pass" } else { "FAIL" }
    );
    Ok(if r.pass { Outcome::Done } else { Outcome::Failed })
}

#[derive(Serialize)]
struct DysonReport {
    fraction_within: f64,
    sigma: f64,
    min_fraction: f64,
    pass: bool,
    config: serde_json::Value,
    empirical: Series,
}

fn dyson(a: &DysonArgs, config: &str) -> anyhow::Result<Outcome> {
    let spec = DysonSpec::new(a.n, a.tau, a.samples, a.common.seed)?;
    let h = dyson_histogram(&spec, a.bin_width, a.bootstrap, Execution::Parallel)?;
    let params = BulkKernelParams::from_ap(a.tau)?;
    let curve = tabulate(grid(-0.5, 0.5, 401)?, CurveMeta::new("bulk").with("ap", a.tau), |x| {
        bulk_density(x, &params)
    })?;
    let fraction = band_agreement(&h, &curve, a.sigma)?;
    let pass = fraction >= a.min_fraction;
    let empirical = DensityCurve::new(
        h.centers(),
        h.normalized_values.clone(),
        CurveMeta::new("dyson").with("n", a.n as f64).with("tau", a.tau),
    )?;
    let meta = base_metadata(config);
    with_output(&a.common.out, |w| Ok(lio::write_curve_csv(w, &meta, &empirical)?))?;
    let report = DysonReport {
        fraction_within: fraction,
        sigma: a.sigma,
        min_fraction: a.min_fraction,
        pass,
        config: serde_json::from_str(config)?,
        empirical: Series::from_histogram(&h),
    };
    match &a.report {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            lio::write_json(&mut w, &report)?;
            w.flush()?;
        }
        None => lio::write_json(&mut io::stderr().lock(), &report)?,
    }
    eprintln!(
        "{:.1}% of bins within {}σ of the bulk kernel at ap = {}: {}",
        100.0 * fraction,
        a.sigma,
        a.tau,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(if pass { Outcome::Done } else { Outcome::Failed })
}
