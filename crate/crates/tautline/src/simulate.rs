//! Replicated simulation study: median modality recovery per signal, test
//! bed and method.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::multiscale::{local_squeeze, SqueezeKind, SqueezeOptions};
use crate::signals::{gen_noise, signal_values, SignalKind, TestBed};
use crate::verify::count_extrema;

/// A fitting method of the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Mean,
    Quantile(f64),
    Poisson,
    Binary,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("quantile:") {
            let beta: f64 = rest.parse().map_err(|_| {
                Error::InvalidParameter(format!("bad quantile level in method '{name}'"))
            })?;
            return Ok(Method::Quantile(beta));
        }
        match lower.as_str() {
            "mean" => Ok(Method::Mean),
            "median" | "quantile" => Ok(Method::Quantile(0.5)),
            "poisson" => Ok(Method::Poisson),
            "binary" | "bernoulli" => Ok(Method::Binary),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected mean, quantile:LEVEL, poisson or binary)"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Method::Mean => "mean".into(),
            Method::Quantile(b) => format!("quantile:{b}"),
            Method::Poisson => "poisson".into(),
            Method::Binary => "binary".into(),
        }
    }

    fn squeeze_kind(&self) -> SqueezeKind {
        match self {
            Method::Mean => SqueezeKind::Mean,
            Method::Quantile(b) => SqueezeKind::Quantile(*b),
            Method::Poisson => SqueezeKind::Poisson,
            Method::Binary => SqueezeKind::Bernoulli,
        }
    }
}

/// One cell of the study.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub signal: SignalKind,
    pub bed: TestBed,
    pub method: Method,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub opts: SqueezeOptions,
}

/// Aggregated outcome of one cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub spec_label: String,
    pub signal: SignalKind,
    pub bed: TestBed,
    pub method: Method,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub true_extrema: Option<usize>,
    pub median_extrema: f64,
    /// Mean absolute deviation from the true count, when the truth is
    /// finite.
    pub mad_from_true: Option<f64>,
    pub counts: Vec<usize>,
}

/// Caps study parallelism: the environment variable first, then the
/// available cores.
pub fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("TAUTLINE_THREADS") {
        if let Ok(t) = v.trim().parse::<usize>() {
            return t.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
}

/// Runs one study cell: `replicates` seeded draws, adaptive squeezing,
/// interior extreme counts. Replicates run concurrently; replicate `r`
/// always uses substream `seed + r`, so results do not depend on thread
/// scheduling.
pub fn run_cell(spec: &CellSpec) -> Result<CellResult> {
    let f = signal_values(spec.signal, spec.n)?;
    let errors: Mutex<Vec<Error>> = Mutex::new(Vec::new());
    let counts: Mutex<Vec<(usize, usize)>> = Mutex::new(Vec::new());

    let threads = thread_cap().min(spec.replicates.max(1));
    let chunk = (spec.replicates + threads - 1) / threads.max(1);
    std::thread::scope(|scope| {
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(spec.replicates);
            if lo >= hi {
                continue;
            }
            let f = &f;
            let errors = &errors;
            let counts = &counts;
            scope.spawn(move || {
                for rep in lo..hi {
                    let y = gen_noise(spec.bed, f, spec.seed + rep as u64);
                    match local_squeeze(&y, spec.method.squeeze_kind(), &spec.opts) {
                        Ok((res, _)) => {
                            let c = count_extrema(&res.fit.values, 1e-9).interior();
                            counts.lock().unwrap().push((rep, c));
                        }
                        Err(e) => errors.lock().unwrap().push(e),
                    }
                }
            });
        }
    });

    let errors = errors.into_inner().unwrap();
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    let mut pairs = counts.into_inner().unwrap();
    pairs.sort_by_key(|&(rep, _)| rep);
    let counts: Vec<usize> = pairs.into_iter().map(|(_, c)| c).collect();

    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let m = sorted.len();
    let median = if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        sorted[m / 2] as f64
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) as f64
    };
    let truth = spec.signal.true_extrema();
    let mad = truth.map(|t| {
        counts
            .iter()
            .map(|&c| (c as f64 - t as f64).abs())
            .sum::<f64>()
            / counts.len().max(1) as f64
    });

    Ok(CellResult {
        spec_label: format!(
            "{}/{}/{} n={}",
            spec.signal.name(),
            spec.bed.name(),
            spec.method.label(),
            spec.n
        ),
        signal: spec.signal,
        bed: spec.bed,
        method: spec.method,
        n: spec.n,
        replicates: spec.replicates,
        seed: spec.seed,
        true_extrema: truth,
        median_extrema: median,
        mad_from_true: mad,
        counts,
    })
}
