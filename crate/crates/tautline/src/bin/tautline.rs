//! Command-line interface: fitting, verification, tube diagnostics and the
//! simulation study.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tautline::csvio;
use tautline::simulate::{run_cell, CellSpec, Method};
use tautline::{
    check_multiresolution, check_optimality, check_optimality_smooth, count_extrema,
    default_lambda_mean, default_lambda_quantile, fit_taut_ties, quantile::fit_quantile_ties,
    sigma_hat, tube_feasible, worst_multiscale_ratio, Blocked, BoundsSpec, Certificate, DataSet,
    Error, ExpFamily, Family, Fit, IntervalFamily, LambdaVector, PseudoHuber, Quadratic,
    QuantileLoss, SigmaMethod, SignalKind, SqueezeKind, SqueezeOptions, TestBed,
};

#[derive(Parser)]
#[command(
    name = "tautline",
    version,
    about = "Nonparametric regression by taut-string total-variation minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a regression curve to a data CSV and write fit + summary files.
    Fit(FitArgs),
    /// Re-check a fitted curve against the exact optimality conditions.
    Verify(VerifyArgs),
    /// Export the cumulative residual-derivative tube of a fit.
    Tube(TubeArgs),
    /// Replicated simulation study of modality recovery.
    Simulate(SimulateArgs),
    /// Sample a benchmark test signal, optionally with noise.
    Signal(SignalArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Fitting method: mean, huber, quantile, poisson or binary.
    #[arg(long)]
    method: Option<String>,
    /// Quantile level for --method quantile.
    #[arg(long)]
    beta: Option<f64>,
    /// Scale of the pseudo-Huber loss for --method huber.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Clone)]
struct PenaltyArgs {
    /// Fixed constant penalty for every gap.
    #[arg(long)]
    lambda: Option<f64>,
    /// CSV file with one penalty per gap (header `lambda`).
    #[arg(long)]
    lambda_file: Option<PathBuf>,
    /// Choose the penalties adaptively by multiscale local squeezing.
    #[arg(long)]
    adaptive: bool,
    /// Squeeze factor in (0, 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Interval family for the multiresolution criterion: dyadic or all.
    #[arg(long)]
    intervals: Option<String>,
    /// Constant of the fixed square-root penalty rule.
    #[arg(long)]
    c: Option<f64>,
    /// Noise-scale estimator: mad or rice.
    #[arg(long)]
    sigma: Option<String>,
    /// Iteration cap for the squeeze.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with columns `x,y` (x optional, defaults to 1..n).
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// Output prefix; writes PREFIX.csv and PREFIX.json.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the per-gap penalties to this CSV.
    #[arg(long)]
    lambda_out: Option<PathBuf>,
    /// key=value file supplying defaults for any long option.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Input data CSV.
    #[arg(long)]
    data: PathBuf,
    /// Fit CSV as written by the fit command.
    #[arg(long)]
    fit: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Fixed constant penalty used for the fit.
    #[arg(long)]
    lambda: Option<f64>,
    /// Per-gap penalty CSV used for the fit.
    #[arg(long)]
    lambda_file: Option<PathBuf>,
    /// Interval family for the multiresolution report.
    #[arg(long, default_value = "dyadic")]
    intervals: String,
    /// Noise-scale estimator for the Gaussian bounds.
    #[arg(long, default_value = "mad")]
    sigma: String,
    /// Constant of the multiscale growth bound report.
    #[arg(long, default_value_t = 8.0)]
    c0: f64,
    /// Certificate tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TubeArgs {
    /// Input CSV with columns `x,y`.
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// Output CSV path.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma-separated signals: blocks,bumps,heavisine,doppler.
    #[arg(long, default_value = "blocks,bumps,heavisine,doppler")]
    signals: String,
    /// Test bed: gaussian, cauchy, binary or poisson.
    #[arg(long, default_value = "gaussian")]
    testbed: String,
    /// Comma-separated methods: mean, quantile:LEVEL, poisson, binary.
    #[arg(long, default_value = "mean")]
    methods: String,
    #[arg(long, default_value_t = 2048)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Interval family for the squeeze.
    #[arg(long, default_value = "dyadic")]
    intervals: String,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Output CSV path for the report table.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SignalArgs {
    /// Signal name: blocks, bumps, heavisine or doppler.
    #[arg(long)]
    name: String,
    #[arg(long)]
    n: usize,
    /// Also draw responses from this test bed.
    #[arg(long)]
    testbed: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path.
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Tube(args) => cmd_tube(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Signal(args) => cmd_signal(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for data problems, 3 for model/coercivity problems.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidData(_) => 2,
        _ => 3,
    }
}

fn io_err(e: std::io::Error, path: &Path) -> Error {
    Error::InvalidData(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// option resolution (flags > config file > defaults)
// ---------------------------------------------------------------------------

struct Config(Vec<(String, String)>);

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Config, Error> {
        let mut entries = Vec::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(e, path))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::InvalidData(format!(
                        "{}: line {}: expected key=value",
                        path.display(),
                        i + 1
                    ))
                })?;
                entries.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        Ok(Config(entries))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn fill<T: std::str::FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<(), Error> {
        if slot.is_none() {
            if let Some(raw) = self.get(key) {
                let v = raw.parse().map_err(|_| {
                    Error::InvalidData(format!("config: cannot parse {key}={raw}"))
                })?;
                *slot = Some(v);
            }
        }
        Ok(())
    }
}

fn apply_config(model: &mut ModelArgs, penalty: &mut PenaltyArgs, cfg: &Config) -> Result<(), Error> {
    cfg.fill(&mut model.method, "method")?;
    cfg.fill(&mut model.beta, "beta")?;
    cfg.fill(&mut model.delta, "delta")?;
    cfg.fill(&mut penalty.lambda, "lambda")?;
    cfg.fill(&mut penalty.gamma, "gamma")?;
    cfg.fill(&mut penalty.intervals, "intervals")?;
    cfg.fill(&mut penalty.c, "c")?;
    cfg.fill(&mut penalty.sigma, "sigma")?;
    cfg.fill(&mut penalty.max_iter, "max_iter")?;
    if !penalty.adaptive {
        if let Some(v) = cfg.get("adaptive") {
            penalty.adaptive = matches!(v, "1" | "true" | "yes");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// model wiring
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum CliMethod {
    Mean,
    Huber(f64),
    Quantile(f64),
    Poisson,
    Binary,
}

impl CliMethod {
    fn resolve(args: &ModelArgs) -> Result<Self, Error> {
        let name = args
            .method
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("--method is required".into()))?;
        match name.to_ascii_lowercase().as_str() {
            "mean" => Ok(CliMethod::Mean),
            "huber" => Ok(CliMethod::Huber(args.delta.unwrap_or(0.1))),
            "quantile" | "median" => Ok(CliMethod::Quantile(args.beta.unwrap_or(0.5))),
            "poisson" => Ok(CliMethod::Poisson),
            "binary" | "bernoulli" => Ok(CliMethod::Binary),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected mean, huber, quantile, poisson or binary)"
            ))),
        }
    }

    fn label(&self) -> String {
        match self {
            CliMethod::Mean => "mean".into(),
            CliMethod::Huber(d) => format!("huber(delta={d})"),
            CliMethod::Quantile(b) => format!("quantile(beta={b})"),
            CliMethod::Poisson => "poisson".into(),
            CliMethod::Binary => "binary".into(),
        }
    }

    fn differentiable(&self) -> bool {
        !matches!(self, CliMethod::Quantile(_))
    }
}

fn read_dataset(path: &Path) -> Result<DataSet, Error> {
    let file = File::open(path).map_err(|e| io_err(e, path))?;
    let xy = csvio::read_xy(BufReader::new(file))?;
    match xy.x {
        Some(x) => DataSet::new(x, xy.y),
        None => DataSet::from_responses(xy.y),
    }
}

/// Default fixed-rule penalty when none is given.
fn default_penalty(method: CliMethod, data: &DataSet, c: f64, sigma: SigmaMethod) -> Result<f64, Error> {
    let m = data.blocks();
    match method {
        CliMethod::Quantile(beta) => Ok(default_lambda_quantile(m, beta, c).max(1e-12)),
        _ => {
            let s = sigma_hat(data.y(), sigma)?;
            let lam = default_lambda_mean(m, s, c);
            if lam > 0.0 {
                Ok(lam)
            } else {
                Ok(1.0)
            }
        }
    }
}

fn parse_sigma(name: Option<&str>) -> Result<SigmaMethod, Error> {
    match name.unwrap_or("mad").to_ascii_lowercase().as_str() {
        "mad" => Ok(SigmaMethod::Mad),
        "rice" => Ok(SigmaMethod::Rice),
        other => Err(Error::InvalidParameter(format!(
            "unknown noise estimator '{other}' (expected mad or rice)"
        ))),
    }
}

/// Everything a fitted curve needs for reporting.
struct FittedCurve {
    /// Block-scale fit with diagnostics.
    fit: Fit,
    /// Per-observation fitted values.
    expanded: Vec<f64>,
    lambda: LambdaVector,
    certificate: Certificate,
    squeeze_iterations: Option<usize>,
}

fn run_fit(
    method: CliMethod,
    penalty: &PenaltyArgs,
    data: &DataSet,
) -> Result<FittedCurve, Error> {
    let m = data.blocks();
    let sigma = parse_sigma(penalty.sigma.as_deref())?;
    let family = match penalty.intervals.as_deref() {
        Some(name) => IntervalFamily::parse(name)?,
        None => IntervalFamily::Dyadic,
    };

    if penalty.adaptive {
        if data.has_ties() {
            return Err(Error::InvalidData(
                "adaptive fitting needs distinct design points".into(),
            ));
        }
        let kind = match method {
            CliMethod::Mean => SqueezeKind::Mean,
            CliMethod::Quantile(beta) => SqueezeKind::Quantile(beta),
            CliMethod::Poisson => SqueezeKind::Poisson,
            CliMethod::Binary => SqueezeKind::Bernoulli,
            CliMethod::Huber(_) => {
                return Err(Error::InvalidParameter(
                    "adaptive fitting supports mean, quantile, poisson and binary".into(),
                ))
            }
        };
        let opts = SqueezeOptions {
            family,
            gamma: penalty.gamma.unwrap_or(0.9),
            max_iter: penalty.max_iter.unwrap_or(10_000),
            sigma,
            gauss_c: None,
        };
        let (res, _trace) = tautline::local_squeeze(data.y(), kind, &opts)?;
        let certificate = certify(method, data, &res.fit.values, &res.lambda)?;
        return Ok(FittedCurve {
            expanded: res.fit.values.clone(),
            fit: res.fit,
            lambda: res.lambda,
            certificate,
            squeeze_iterations: Some(res.iterations),
        });
    }

    let lambda = if let Some(path) = &penalty.lambda_file {
        let file = File::open(path).map_err(|e| io_err(e, path))?;
        let gaps = csvio::read_lambda(BufReader::new(file))?;
        if gaps.len() + 1 != m {
            return Err(Error::InvalidData(format!(
                "penalty file has {} gaps but the data has {} blocks",
                gaps.len(),
                m
            )));
        }
        LambdaVector::new(gaps)?
    } else if let Some(lam) = penalty.lambda {
        LambdaVector::constant(lam, m)?
    } else {
        let lam = default_penalty(method, data, penalty.c.unwrap_or(0.2), sigma)?;
        LambdaVector::constant(lam, m)?
    };

    let (fit, expanded) = fit_with_lambda(method, data, &lambda)?;
    let certificate = certify(method, data, &fit.values, &lambda)?;
    Ok(FittedCurve {
        fit,
        expanded,
        lambda,
        certificate,
        squeeze_iterations: None,
    })
}

fn fit_with_lambda(
    method: CliMethod,
    data: &DataSet,
    lambda: &LambdaVector,
) -> Result<(Fit, Vec<f64>), Error> {
    match method {
        CliMethod::Mean => {
            let model = Quadratic::new(data.y().to_vec())?;
            fit_taut_ties(&model, data, lambda)
        }
        CliMethod::Huber(delta) => {
            let model = PseudoHuber::new(data.y().to_vec(), delta)?;
            fit_taut_ties(&model, data, lambda)
        }
        CliMethod::Quantile(beta) => {
            let (qf, expanded) = fit_quantile_ties(data, beta, lambda)?;
            Ok((qf.fit, expanded))
        }
        CliMethod::Poisson | CliMethod::Binary => {
            let fam = if method == CliMethod::Poisson {
                Family::Poisson
            } else {
                Family::Bernoulli
            };
            let model = ExpFamily::new(data.y().to_vec(), fam)?;
            let lo = data.y().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = data.y().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(lo < hi) {
                let msg = match fam {
                    Family::Poisson if hi == 0.0 => {
                        "all Poisson counts are zero; the penalized likelihood has no maximizer"
                            .to_string()
                    }
                    Family::Poisson => format!(
                        "all Poisson counts equal {hi}; the penalized likelihood has no maximizer"
                    ),
                    Family::Bernoulli => format!(
                        "constant binary labels (all {hi}); the penalized likelihood has no maximizer"
                    ),
                };
                return Err(Error::NonCoerciveData(msg));
            }
            let ls = Quadratic::new(data.y().to_vec())?;
            let (ls_fit, _) = fit_taut_ties(&ls, data, lambda)?;
            let natural: Result<Vec<f64>, Error> =
                ls_fit.values.iter().map(|&v| fam.natural(v)).collect();
            let blocked = Blocked::new(&model, data.block_ends())?;
            let fit = Fit::from_values(&blocked, lambda, natural?);
            let mut expanded = Vec::with_capacity(data.n());
            for b in 0..data.blocks() {
                let (lo, hi) = data.block_range(b);
                expanded.extend(std::iter::repeat(fit.values[b]).take(hi - lo));
            }
            Ok((fit, expanded))
        }
    }
}

/// Exact optimality certificate on the block scale.
fn certify(
    method: CliMethod,
    data: &DataSet,
    block_values: &[f64],
    lambda: &LambdaVector,
) -> Result<Certificate, Error> {
    let tol = 1e-8;
    match method {
        CliMethod::Mean => {
            let model = Quadratic::new(data.y().to_vec())?;
            let b = Blocked::new(&model, data.block_ends())?;
            check_optimality_smooth(&b, lambda, block_values, tol)
        }
        CliMethod::Huber(delta) => {
            let model = PseudoHuber::new(data.y().to_vec(), delta)?;
            let b = Blocked::new(&model, data.block_ends())?;
            check_optimality_smooth(&b, lambda, block_values, tol)
        }
        CliMethod::Quantile(beta) => {
            let model = QuantileLoss::new(data.y().to_vec(), beta)?;
            let b = Blocked::new(&model, data.block_ends())?;
            Ok(check_optimality(&b, lambda, block_values, tol))
        }
        CliMethod::Poisson | CliMethod::Binary => {
            let fam = if method == CliMethod::Poisson {
                Family::Poisson
            } else {
                Family::Bernoulli
            };
            let model = ExpFamily::new(data.y().to_vec(), fam)?;
            let b = Blocked::new(&model, data.block_ends())?;
            check_optimality_smooth(&b, lambda, block_values, tol)
        }
    }
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LambdaSummary {
    kind: &'static str,
    min: f64,
    max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
}

#[derive(Serialize)]
struct ExtremaSummaryJson {
    total: usize,
    interior: usize,
}

#[derive(Serialize)]
struct CertificateJson {
    condition: &'static str,
    pass: bool,
    worst_violation: f64,
    location: (usize, usize),
}

#[derive(Serialize)]
struct FitSummary {
    method: String,
    n: usize,
    blocks: usize,
    lambda: LambdaSummary,
    objective: f64,
    extrema: ExtremaSummaryJson,
    certificate: CertificateJson,
}

fn cmd_fit(mut args: FitArgs) -> Result<ExitCode, Error> {
    let cfg = Config::load(args.config.as_ref())?;
    apply_config(&mut args.model, &mut args.penalty, &cfg)?;
    let method = CliMethod::resolve(&args.model)?;
    let data = read_dataset(&args.input)?;
    let curve = run_fit(method, &args.penalty, &data)?;

    // fit CSV on the observation scale
    let mut segment_ids = Vec::with_capacity(data.n());
    {
        let mut id = 0usize;
        for (i, &v) in curve.expanded.iter().enumerate() {
            if i > 0 && v != curve.expanded[i - 1] {
                id += 1;
            }
            segment_ids.push(id);
        }
    }
    let csv_path = args.output.with_extension("csv");
    let file = File::create(&csv_path).map_err(|e| io_err(e, &csv_path))?;
    csvio::write_fit(
        BufWriter::new(file),
        &data.x_expanded(),
        data.y(),
        &curve.expanded,
        &segment_ids,
    )
    .map_err(|e| io_err(e, &csv_path))?;

    if let Some(path) = &args.lambda_out {
        let file = File::create(path).map_err(|e| io_err(e, path))?;
        csvio::write_lambda(BufWriter::new(file), curve.lambda.gaps())
            .map_err(|e| io_err(e, path))?;
    }

    let ext = count_extrema(&curve.fit.values, 1e-9);
    let gaps = curve.lambda.gaps();
    let summary = FitSummary {
        method: method.label(),
        n: data.n(),
        blocks: data.blocks(),
        lambda: LambdaSummary {
            kind: if curve.squeeze_iterations.is_some() {
                "adaptive"
            } else {
                "fixed"
            },
            min: gaps.iter().cloned().fold(f64::INFINITY, f64::min),
            max: gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            iterations: curve.squeeze_iterations,
        },
        objective: curve.fit.objective,
        extrema: ExtremaSummaryJson {
            total: ext.total(),
            interior: ext.interior(),
        },
        certificate: CertificateJson {
            condition: curve.certificate.kind.name(),
            pass: curve.certificate.pass,
            worst_violation: curve.certificate.worst,
            location: curve.certificate.location,
        },
    };
    let json_path = args.output.with_extension("json");
    let file = File::create(&json_path).map_err(|e| io_err(e, &json_path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &summary)
        .map_err(|e| Error::InvalidData(format!("summary serialization: {e}")))?;
    writeln!(w).ok();

    if !curve.certificate.pass {
        eprintln!(
            "certificate failure: worst violation {} at {:?}",
            curve.certificate.worst, curve.certificate.location
        );
        return Ok(ExitCode::from(4));
    }
    println!(
        "fit: n={} objective={:.6} segments={} extrema(interior)={} -> {}",
        data.n(),
        curve.fit.objective,
        curve.fit.segments.len(),
        ext.interior(),
        csv_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(mut args: VerifyArgs) -> Result<ExitCode, Error> {
    let cfg = Config::load(args.config.as_ref())?;
    let mut dummy_penalty = PenaltyArgs {
        lambda: args.lambda,
        lambda_file: args.lambda_file.clone(),
        adaptive: false,
        gamma: None,
        intervals: Some(args.intervals.clone()),
        c: None,
        sigma: Some(args.sigma.clone()),
        max_iter: None,
    };
    apply_config(&mut args.model, &mut dummy_penalty, &cfg)?;
    let method = CliMethod::resolve(&args.model)?;
    let data = read_dataset(&args.data)?;

    // fitted values from the fit CSV
    let file = File::open(&args.fit).map_err(|e| io_err(e, &args.fit))?;
    let fitted = read_fitted_column(BufReader::new(file))?;
    if fitted.len() != data.n() {
        return Err(Error::InvalidData(format!(
            "fit file has {} rows, data has {}",
            fitted.len(),
            data.n()
        )));
    }
    // collapse to block scale
    let mut block_values = Vec::with_capacity(data.blocks());
    for b in 0..data.blocks() {
        let (lo, hi) = data.block_range(b);
        let v = fitted[lo];
        for i in lo..hi {
            if fitted[i] != v {
                return Err(Error::InvalidData(format!(
                    "fitted values differ inside tie block {b}"
                )));
            }
        }
        block_values.push(v);
    }

    let m = data.blocks();
    let lambda = if let Some(path) = &dummy_penalty.lambda_file {
        let file = File::open(path).map_err(|e| io_err(e, path))?;
        LambdaVector::new(csvio::read_lambda(BufReader::new(file))?)?
    } else if let Some(lam) = dummy_penalty.lambda {
        LambdaVector::constant(lam, m)?
    } else {
        return Err(Error::InvalidParameter(
            "verify needs --lambda or --lambda-file".into(),
        ));
    };
    if lambda.n() != m {
        return Err(Error::InvalidData(format!(
            "penalty vector sized for {} blocks, data has {m}",
            lambda.n()
        )));
    }

    let cert = certify(method, &data, &block_values, &lambda)?;
    println!(
        "optimality ({}): {} (worst violation {:.3e} at {:?})",
        cert.kind.name(),
        if cert.pass { "pass" } else { "FAIL" },
        cert.worst,
        cert.location
    );

    let sigma = parse_sigma(Some(&args.sigma))?;
    let family = IntervalFamily::parse(&args.intervals)?;
    let report = multires_report(method, &data, &block_values, family, sigma, args.c0)?;
    if let Some((violations, ratio)) = report {
        println!("multiresolution violations ({}): {}", family.name(), violations);
        println!("multiscale growth ratio at c0={}: {:.4}", args.c0, ratio);
    }

    // tube feasibility for differentiable models
    if method.differentiable() {
        let feasible = tube_report(method, &data, &block_values, &lambda)?;
        println!(
            "tube feasibility: {}",
            if feasible { "pass" } else { "FAIL" }
        );
    }

    if cert.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}

fn read_fitted_column<R: std::io::BufRead>(reader: R) -> Result<Vec<f64>, Error> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        _ => return Err(Error::InvalidData("empty fit file".into())),
    };
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let col = cols
        .iter()
        .position(|c| c == "fitted")
        .ok_or_else(|| Error::InvalidData("fit file needs a 'fitted' column".into()))?;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::InvalidData(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::InvalidData(format!(
                "line {}: expected {} fields",
                idx + 1,
                cols.len()
            )));
        }
        out.push(fields[col].trim().parse().map_err(|_| {
            Error::InvalidData(format!("line {}: bad fitted value", idx + 1))
        })?);
    }
    Ok(out)
}

fn multires_report(
    method: CliMethod,
    data: &DataSet,
    block_values: &[f64],
    family: IntervalFamily,
    sigma: SigmaMethod,
    c0: f64,
) -> Result<Option<(usize, f64)>, Error> {
    if data.has_ties() {
        return Ok(None);
    }
    let y = data.y().to_vec();
    let (violations, ratio) = match method {
        CliMethod::Mean | CliMethod::Huber(_) => {
            let model = Quadratic::new(y.clone())?;
            let s = sigma_hat(&y, sigma)?;
            let v = check_multiresolution(
                &model,
                block_values,
                family,
                BoundsSpec::Gaussian { sigma: s },
                None,
            )?;
            (v.len(), worst_multiscale_ratio(&model, block_values, c0))
        }
        CliMethod::Quantile(beta) => {
            let model = QuantileLoss::new(y, beta)?;
            let v = check_multiresolution(
                &model,
                block_values,
                family,
                BoundsSpec::QuantileIndicators { beta },
                None,
            )?;
            (v.len(), worst_multiscale_ratio(&model, block_values, c0))
        }
        CliMethod::Poisson | CliMethod::Binary => {
            let fam = if method == CliMethod::Poisson {
                Family::Poisson
            } else {
                Family::Bernoulli
            };
            let model = ExpFamily::new(y, fam)?;
            let mean_values: Vec<f64> =
                block_values.iter().map(|&v| fam.mean(v)).collect();
            let spec = if fam == Family::Poisson {
                BoundsSpec::PoissonCounts
            } else {
                BoundsSpec::BernoulliProbs
            };
            let v = check_multiresolution(
                &model,
                block_values,
                family,
                spec,
                Some(&mean_values),
            )?;
            (v.len(), worst_multiscale_ratio(&model, block_values, c0))
        }
    };
    Ok(Some((violations, ratio)))
}

fn tube_report(
    method: CliMethod,
    data: &DataSet,
    block_values: &[f64],
    lambda: &LambdaVector,
) -> Result<bool, Error> {
    let y = data.y().to_vec();
    Ok(match method {
        CliMethod::Mean => {
            let model = Quadratic::new(y)?;
            let b = Blocked::new(&model, data.block_ends())?;
            tube_feasible(&b, lambda, block_values)
        }
        CliMethod::Huber(delta) => {
            let model = PseudoHuber::new(y, delta)?;
            let b = Blocked::new(&model, data.block_ends())?;
            tube_feasible(&b, lambda, block_values)
        }
        CliMethod::Poisson | CliMethod::Binary => {
            let fam = if method == CliMethod::Poisson {
                Family::Poisson
            } else {
                Family::Bernoulli
            };
            let model = ExpFamily::new(y, fam)?;
            let b = Blocked::new(&model, data.block_ends())?;
            tube_feasible(&b, lambda, block_values)
        }
        CliMethod::Quantile(_) => true,
    })
}

// ---------------------------------------------------------------------------
// tube
// ---------------------------------------------------------------------------

fn cmd_tube(mut args: TubeArgs) -> Result<ExitCode, Error> {
    let cfg = Config::load(args.config.as_ref())?;
    apply_config(&mut args.model, &mut args.penalty, &cfg)?;
    let method = CliMethod::resolve(&args.model)?;
    let data = read_dataset(&args.input)?;
    let curve = run_fit(method, &args.penalty, &data)?;
    let file = File::create(&args.output).map_err(|e| io_err(e, &args.output))?;
    let lambda = curve.lambda.clone();
    csvio::write_tube(BufWriter::new(file), &curve.fit.cumsum_right, |k| {
        lambda.at(k)
    })
    .map_err(|e| io_err(e, &args.output))?;
    println!("tube: {} rows -> {}", curve.fit.cumsum_right.len(), args.output.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let bed = TestBed::parse(&args.testbed)?;
    let family = IntervalFamily::parse(&args.intervals)?;
    let signals: Vec<SignalKind> = args
        .signals
        .split(',')
        .map(|s| SignalKind::parse(s.trim()))
        .collect::<Result<_, _>>()?;
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .map(|s| Method::parse(s.trim()))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    println!(
        "{:<10} {:<9} {:<14} {:>6} {:>6} {:>8} {:>8}",
        "signal", "testbed", "method", "n", "true", "median", "mad"
    );
    for &signal in &signals {
        for &method in &methods {
            let spec = CellSpec {
                signal,
                bed,
                method,
                n: args.n,
                replicates: args.reps,
                seed: args.seed,
                opts: SqueezeOptions {
                    family,
                    gamma: args.gamma,
                    ..SqueezeOptions::default()
                },
            };
            let r = run_cell(&spec)?;
            println!(
                "{:<10} {:<9} {:<14} {:>6} {:>6} {:>8.1} {:>8}",
                r.signal.name(),
                r.bed.name(),
                r.method.label(),
                r.n,
                r.true_extrema
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| "inf".into()),
                r.median_extrema,
                r.mad_from_true
                    .map(|m| format!("{m:.2}"))
                    .unwrap_or_default(),
            );
            rows.push(r);
        }
    }

    if let Some(path) = &args.output {
        let file = File::create(path).map_err(|e| io_err(e, path))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            writeln!(
                w,
                "signal,testbed,method,n,reps,seed,true_extrema,median_extrema,mad_from_true"
            )?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    r.signal.name(),
                    r.bed.name(),
                    r.method.label(),
                    r.n,
                    r.replicates,
                    r.seed,
                    r.true_extrema.map(|t| t.to_string()).unwrap_or_default(),
                    r.median_extrema,
                    r.mad_from_true
                        .map(|m| csvio::fmt_f64(m))
                        .unwrap_or_default(),
                )?;
            }
            Ok(())
        })()
        .map_err(|e| io_err(e, path))?;
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// signal
// ---------------------------------------------------------------------------

fn cmd_signal(args: SignalArgs) -> Result<ExitCode, Error> {
    let kind = SignalKind::parse(&args.name)?;
    let f = tautline::signal_values(kind, args.n)?;
    let y = match &args.testbed {
        Some(name) => Some(tautline::gen_noise(TestBed::parse(name)?, &f, args.seed)),
        None => None,
    };
    let file = File::create(&args.output).map_err(|e| io_err(e, &args.output))?;
    csvio::write_signal(BufWriter::new(file), &f, y.as_deref())
        .map_err(|e| io_err(e, &args.output))?;
    println!("signal: {} values -> {}", args.n, args.output.display());
    Ok(ExitCode::SUCCESS)
}
