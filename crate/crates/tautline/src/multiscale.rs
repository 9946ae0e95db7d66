//! Penalty selection: fixed square-root rules and adaptive local squeezing
//! against multiresolution residual criteria.
//!
//! The adaptive path starts from a penalty so large that the fit is
//! constant, then repeatedly shrinks the penalties on the gaps touching
//! every interval where the cumulative residual derivatives exceed bounds
//! that pure noise would respect. Bounds are exact tail quantiles of the
//! residual sums under the fitted model: Gaussian closed forms for mean
//! fits, binomial for quantile and binary fits, Poisson for count fits.

use std::collections::HashMap;

use crate::data::LambdaVector;
use crate::dist;
use crate::error::{Error, Result};
use crate::expfam::{fit_expfam, ExpFamilyFit};
use crate::loss::{check_beta, ExpFamily, Family, LossModel, Quadratic, QuantileLoss};
use crate::quantile::{fit_quantile, rank_vector, RankLoss};
use crate::taut::{fit_taut, Fit};

/// Interval collections for the multiresolution criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalFamily {
    /// All n(n+1)/2 index intervals.
    All,
    /// Intervals with dyadic endpoints: `{2^l m + 1, ..., 2^l (m+1)}`
    /// clipped to 1..n, for every scale l. At most 2n intervals.
    Dyadic,
}

impl IntervalFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "all" => Ok(IntervalFamily::All),
            "dyadic" => Ok(IntervalFamily::Dyadic),
            other => Err(Error::InvalidParameter(format!(
                "unknown interval family '{other}' (expected all or dyadic)"
            ))),
        }
    }

    /// 1-based inclusive intervals of the family over 1..n.
    pub fn iter(self, n: usize) -> Box<dyn Iterator<Item = (usize, usize)>> {
        match self {
            IntervalFamily::All => {
                Box::new((1..=n).flat_map(move |j| (j..=n).map(move |k| (j, k))))
            }
            IntervalFamily::Dyadic => {
                let mut out = Vec::new();
                let mut step = 1usize;
                while step <= n.max(1) {
                    let mut m = 0usize;
                    loop {
                        let j = step * m + 1;
                        if j > n || m > (n - 1) / step {
                            break;
                        }
                        let k = (step * (m + 1)).min(n);
                        out.push((j, k));
                        m += 1;
                    }
                    if step > n / 2 {
                        break;
                    }
                    step *= 2;
                }
                Box::new(out.into_iter())
            }
        }
    }

    pub fn len(self, n: usize) -> usize {
        self.iter(n).count()
    }

    pub fn name(self) -> &'static str {
        match self {
            IntervalFamily::All => "all",
            IntervalFamily::Dyadic => "dyadic",
        }
    }
}

/// Noise-level estimators from first differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMethod {
    /// Root mean square of first differences over 2(n-1).
    Rice,
    /// Median absolute first difference, scaled to the normal.
    Mad,
    Fixed(f64),
}

/// Estimates the noise standard deviation from first differences.
pub fn sigma_hat(y: &[f64], method: SigmaMethod) -> Result<f64> {
    if let SigmaMethod::Fixed(s) = method {
        return Ok(s);
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidData(
            "noise estimation needs at least two observations".into(),
        ));
    }
    match method {
        SigmaMethod::Rice => {
            let ss: f64 = y.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
            Ok((ss / (2.0 * (n - 1) as f64)).sqrt())
        }
        SigmaMethod::Mad => {
            let mut d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = d.len();
            let med = if m % 2 == 1 {
                d[m / 2]
            } else {
                0.5 * (d[m / 2 - 1] + d[m / 2])
            };
            // Phi^{-1}(3/4)
            const NORMAL_Q75: f64 = 0.674_489_750_196_081_7;
            Ok(med / (2.0f64.sqrt() * NORMAL_Q75))
        }
        SigmaMethod::Fixed(_) => unreachable!(),
    }
}

/// Default constant penalty on the square-root scale for mean fits.
pub fn default_lambda_mean(n: usize, sigma: f64, c: f64) -> f64 {
    c * (n as f64).sqrt() * sigma
}

/// Default constant penalty for quantile fits at level beta.
pub fn default_lambda_quantile(n: usize, beta: f64, c: f64) -> f64 {
    c * (n as f64).sqrt() * (beta * (1.0 - beta)).sqrt()
}

/// Which distribution bounds the residual derivative sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsSpec {
    /// Symmetric Gaussian bound `sigma sqrt(m) sqrt(2 log n)`.
    Gaussian { sigma: f64 },
    /// Scale-aware Gaussian bound `sigma sqrt(m) (sqrt(2 log(e n / m)) + c)`.
    GaussianScaled { sigma: f64, c: f64 },
    /// Indicator sums of a quantile fit: Binomial(m, beta) tails.
    QuantileIndicators { beta: f64 },
    /// Count residuals: Poisson tails at the summed fitted rates.
    PoissonCounts,
    /// Binary residuals: Binomial(m, mean fitted probability) tails.
    BernoulliProbs,
}

/// Integer tail quantiles of a discrete distribution with mean `es`:
/// the largest `q_lo` with `P(S <= q_lo - 1) <= p` and the smallest `q_hi`
/// with `P(S >= q_hi + 1) <= p`, scanning from the mean outwards.
fn tail_quantiles(es: f64, p: f64, cdf: &dyn Fn(i64) -> f64, sf: &dyn Fn(i64) -> f64) -> (i64, i64) {
    let mut q_lo = (es.ceil() as i64 - 1).max(-1);
    while q_lo >= 0 && cdf(q_lo - 1) > p {
        q_lo -= 1;
    }
    let mut q_hi = es.floor() as i64 + 1;
    while sf(q_hi + 1) > p {
        q_hi += 1;
    }
    (q_lo, q_hi)
}

/// Evaluates the bounds of one interval: the pair `(eta_lo, eta_hi)` with
/// `eta_lo < 0 < eta_hi` such that under the fitted model the interval's
/// residual derivative sums exceed them with probability at most 1/n each.
/// `mean_values` supplies the fitted rates/probabilities for the count and
/// binary specs.
pub fn eta_bounds(
    spec: BoundsSpec,
    j: usize,
    k: usize,
    n: usize,
    mean_values: Option<&[f64]>,
) -> Result<(f64, f64)> {
    if j < 1 || k < j || k > n {
        return Err(Error::InvalidParameter(format!(
            "empty or out-of-range interval ({j}, {k})"
        )));
    }
    let mut engine = BoundsEngine::new(spec, n, mean_values)?;
    Ok(engine.eta(j, k))
}

struct BoundsEngine {
    spec: BoundsSpec,
    n: usize,
    /// Prefix sums of the fitted mean-scale values (counts/probabilities).
    mean_prefix: Vec<f64>,
    cache: HashMap<usize, (f64, f64)>,
}

impl BoundsEngine {
    fn new(spec: BoundsSpec, n: usize, mean_values: Option<&[f64]>) -> Result<Self> {
        let needs_fit = matches!(
            spec,
            BoundsSpec::PoissonCounts | BoundsSpec::BernoulliProbs
        );
        let mean_prefix = if needs_fit {
            let mv = mean_values.ok_or_else(|| {
                Error::InvalidParameter(
                    "count and binary bounds need the fitted mean values".into(),
                )
            })?;
            let mut p = Vec::with_capacity(mv.len() + 1);
            p.push(0.0);
            let mut acc = 0.0;
            for &v in mv {
                acc += v;
                p.push(acc);
            }
            p
        } else {
            Vec::new()
        };
        Ok(BoundsEngine {
            spec,
            n,
            mean_prefix,
            cache: HashMap::new(),
        })
    }

    fn eta(&mut self, j: usize, k: usize) -> (f64, f64) {
        let m = k - j + 1;
        let n = self.n;
        let p = 1.0 / n as f64;
        match self.spec {
            BoundsSpec::Gaussian { sigma } => {
                let h = sigma * (m as f64).sqrt() * (2.0 * (n as f64).ln()).sqrt();
                (-h, h)
            }
            BoundsSpec::GaussianScaled { sigma, c } => {
                let h = sigma
                    * (m as f64).sqrt()
                    * ((2.0 * (std::f64::consts::E * n as f64 / m as f64).ln()).sqrt() + c);
                (-h, h)
            }
            BoundsSpec::QuantileIndicators { beta } => {
                if let Some(&b) = self.cache.get(&m) {
                    return b;
                }
                let tails = dist_binom_tails(m as u64, beta);
                let es = m as f64 * beta;
                let (q_lo, q_hi) =
                    tail_quantiles(es, p, &|q| tails.cdf(q), &|q| tails.sf(q));
                // residual sums are S - ES
                let b = (q_lo as f64 - es, q_hi as f64 - es);
                self.cache.insert(m, b);
                b
            }
            BoundsSpec::PoissonCounts => {
                let rate = self.mean_prefix[k] - self.mean_prefix[j - 1];
                // incomplete-gamma route: O(1) per probe at any rate
                let (q_lo, q_hi) = tail_quantiles(
                    rate,
                    p,
                    &|q| dist::poisson_cdf_gamma(q, rate),
                    &|q| dist::poisson_sf_gamma(q, rate),
                );
                // residual sums are ES - S
                (rate - q_hi as f64, rate - q_lo as f64)
            }
            BoundsSpec::BernoulliProbs => {
                let mean_p =
                    (self.mean_prefix[k] - self.mean_prefix[j - 1]) / m as f64;
                let mean_p = mean_p.clamp(0.0, 1.0);
                let tails = dist_binom_tails(m as u64, mean_p);
                let es = m as f64 * mean_p;
                let (q_lo, q_hi) =
                    tail_quantiles(es, p, &|q| tails.cdf(q), &|q| tails.sf(q));
                (es - q_hi as f64, es - q_lo as f64)
            }
        }
    }
}

/// Full CDF/survival tables of a Binomial(n, p), built once per size.
struct BinomTails {
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

impl BinomTails {
    fn cdf(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else if k as usize >= self.cdf.len() {
            1.0
        } else {
            self.cdf[k as usize]
        }
    }

    fn sf(&self, k: i64) -> f64 {
        if k <= 0 {
            1.0
        } else if k as usize >= self.sf.len() {
            0.0
        } else {
            self.sf[k as usize]
        }
    }
}

fn dist_binom_tails(n: u64, p: f64) -> BinomTails {
    let len = n as usize + 1;
    let mut pmf = vec![0.0f64; len];
    for k in 0..len {
        pmf[k] = dist::binom_pmf(k as u64, n, p);
    }
    let mut cdf = vec![0.0f64; len];
    let mut acc = 0.0;
    for k in 0..len {
        acc += pmf[k];
        cdf[k] = acc.min(1.0);
    }
    let mut sf = vec![0.0f64; len];
    let mut acc = 0.0;
    for k in (0..len).rev() {
        acc += pmf[k];
        sf[k] = acc.min(1.0);
    }
    BinomTails { cdf, sf }
}

/// Finds every family interval where the fit's cumulative one-sided
/// residual derivatives escape the bounds: flagged when the right-side sum
/// drops below `eta_lo` or the left-side sum exceeds `eta_hi`.
pub fn check_multiresolution<M: LossModel + ?Sized>(
    model: &M,
    fit_values: &[f64],
    family: IntervalFamily,
    spec: BoundsSpec,
    mean_values: Option<&[f64]>,
) -> Result<Vec<(usize, usize)>> {
    let n = fit_values.len();
    let mut engine = BoundsEngine::new(spec, n, mean_values)?;
    let mut pl = Vec::with_capacity(n + 1);
    let mut pr = Vec::with_capacity(n + 1);
    pl.push(0.0);
    pr.push(0.0);
    let (mut al, mut ar) = (0.0, 0.0);
    for (i, &v) in fit_values.iter().enumerate() {
        al += model.left_deriv(i, v);
        ar += model.right_deriv(i, v);
        pl.push(al);
        pr.push(ar);
    }
    // the discrete bounds sit exactly on probability atoms (a single
    // indicator residual attains the one-point bound), so the strict
    // comparisons get a slack far below any atom spacing to keep
    // prefix-sum rounding from manufacturing violations
    let slack = 1e-8;
    let mut out = Vec::new();
    for (j, k) in family.iter(n) {
        let sum_right = pr[k] - pr[j - 1];
        let sum_left = pl[k] - pl[j - 1];
        let (lo, hi) = engine.eta(j, k);
        if sum_right < lo - slack || sum_left > hi + slack {
            out.push((j, k));
        }
    }
    Ok(out)
}

/// Worst multiscale residual ratio: the maximum over all index ranges of
/// the one-sided residual derivative sums against
/// `sqrt(c m log n) + c log n`. At most 1 when the fit satisfies the
/// multiscale growth bound with constant `c`.
pub fn worst_multiscale_ratio<M: LossModel + ?Sized>(
    model: &M,
    fit_values: &[f64],
    c: f64,
) -> f64 {
    let n = fit_values.len();
    let logn = (n.max(2) as f64).ln();
    let mut pl = Vec::with_capacity(n + 1);
    let mut pr = Vec::with_capacity(n + 1);
    pl.push(0.0);
    pr.push(0.0);
    let (mut al, mut ar) = (0.0, 0.0);
    for (i, &v) in fit_values.iter().enumerate() {
        al += model.left_deriv(i, v);
        ar += model.right_deriv(i, v);
        pl.push(al);
        pr.push(ar);
    }
    let mut worst = 0.0f64;
    for j in 1..=n {
        for k in j..=n {
            let m = (k - j + 1) as f64;
            let bound = (c * m * logn).sqrt() + c * logn;
            let up = pl[k] - pl[j - 1];
            let down = -(pr[k] - pr[j - 1]);
            worst = worst.max(up / bound).max(down / bound);
        }
    }
    worst
}

/// What the squeeze fits at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqueezeKind {
    Mean,
    Quantile(f64),
    Poisson,
    Bernoulli,
}

#[derive(Debug, Clone)]
pub struct SqueezeOptions {
    pub family: IntervalFamily,
    pub gamma: f64,
    pub max_iter: usize,
    pub sigma: SigmaMethod,
    /// Use the scale-aware Gaussian bounds with this constant instead of
    /// the fixed ones.
    pub gauss_c: Option<f64>,
}

impl Default for SqueezeOptions {
    fn default() -> Self {
        SqueezeOptions {
            family: IntervalFamily::Dyadic,
            gamma: 0.9,
            max_iter: 10_000,
            sigma: SigmaMethod::Mad,
            gauss_c: None,
        }
    }
}

/// Per-iteration record of the squeeze.
#[derive(Debug, Clone)]
pub struct SqueezeTrace {
    pub lambdas: Vec<Vec<f64>>,
    pub violations: Vec<Vec<(usize, usize)>>,
    pub objectives: Vec<f64>,
}

/// Result of the adaptive fit.
#[derive(Debug, Clone)]
pub struct SqueezeResult {
    /// Final fit: response scale for mean and quantile, natural-parameter
    /// scale for the likelihood kinds.
    pub fit: Fit,
    /// Mean-scale values for the likelihood kinds.
    pub mean_values: Option<Vec<f64>>,
    pub lambda: LambdaVector,
    pub iterations: usize,
}

/// Iteratively shrinks gap penalties on intervals violating the
/// multiresolution criterion until the fit is adequate everywhere. Starts
/// from a constant penalty large enough that the first fit is constant.
pub fn local_squeeze(
    y: &[f64],
    kind: SqueezeKind,
    opts: &SqueezeOptions,
) -> Result<(SqueezeResult, SqueezeTrace)> {
    if !(opts.gamma > 0.0 && opts.gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "squeeze factor must lie in (0, 1), got {}",
            opts.gamma
        )));
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidData("empty response vector".into()));
    }
    if let SqueezeKind::Quantile(beta) = kind {
        check_beta(beta)?;
    }

    // models reused across iterations
    let quad = Quadratic::new(y.to_vec())?;
    let quantile_pack = if let SqueezeKind::Quantile(beta) = kind {
        let data = QuantileLoss::new(y.to_vec(), beta)?;
        let rank = RankLoss::new(rank_vector(y), beta)?;
        Some((data, rank, beta))
    } else {
        None
    };
    let expfam_family = match kind {
        SqueezeKind::Poisson => Some(Family::Poisson),
        SqueezeKind::Bernoulli => Some(Family::Bernoulli),
        _ => None,
    };
    let ef_model = match expfam_family {
        Some(fam) => Some(ExpFamily::new(y.to_vec(), fam)?),
        None => None,
    };

    // penalty large enough that the first fit is one constant segment
    let big = match (&kind, &quantile_pack) {
        (SqueezeKind::Mean, _) | (SqueezeKind::Poisson, _) | (SqueezeKind::Bernoulli, _) => {
            let mean = y.iter().sum::<f64>() / n as f64;
            let mut acc = 0.0;
            let mut worst = 0.0f64;
            for &v in y {
                acc += v - mean;
                worst = worst.max(acc.abs());
            }
            worst + 1.0
        }
        (SqueezeKind::Quantile(_), Some((_, rank, _))) => {
            let r = rank.lower_inverse(0, n - 1, 0.0)?;
            let mut acc = 0.0;
            let mut worst = 0.0f64;
            for i in 0..n {
                acc += rank.right_deriv(i, r);
                worst = worst.max(acc.abs());
            }
            worst + 1.0
        }
        _ => unreachable!(),
    };

    let bounds_spec = match kind {
        SqueezeKind::Mean => {
            let sigma = sigma_hat(y, opts.sigma).unwrap_or(0.0);
            match opts.gauss_c {
                Some(c) => BoundsSpec::GaussianScaled { sigma, c },
                None => BoundsSpec::Gaussian { sigma },
            }
        }
        SqueezeKind::Quantile(beta) => BoundsSpec::QuantileIndicators { beta },
        SqueezeKind::Poisson => BoundsSpec::PoissonCounts,
        SqueezeKind::Bernoulli => BoundsSpec::BernoulliProbs,
    };

    let mut lambda = LambdaVector::constant(big, n)?;
    let mut trace = SqueezeTrace {
        lambdas: Vec::new(),
        violations: Vec::new(),
        objectives: Vec::new(),
    };

    for iter in 1..=opts.max_iter {
        // fit at the current penalties
        let (fit, mean_values): (Fit, Option<Vec<f64>>) = match (&kind, &quantile_pack) {
            (SqueezeKind::Mean, _) => (fit_taut(&quad, &lambda)?, None),
            (SqueezeKind::Quantile(beta), Some((_, _, _))) => {
                let q = fit_quantile(y, *beta, &lambda)?;
                (q.fit, None)
            }
            (SqueezeKind::Poisson, _) | (SqueezeKind::Bernoulli, _) => {
                let ef: ExpFamilyFit = fit_expfam(y, &lambda, expfam_family.unwrap())?;
                (ef.fit, Some(ef.mean_values))
            }
            _ => unreachable!(),
        };

        let violations = match (&kind, &quantile_pack, &ef_model) {
            (SqueezeKind::Mean, _, _) => check_multiresolution(
                &quad,
                &fit.values,
                opts.family,
                bounds_spec,
                None,
            )?,
            (SqueezeKind::Quantile(_), Some((data, _, _)), _) => check_multiresolution(
                data,
                &fit.values,
                opts.family,
                bounds_spec,
                None,
            )?,
            (_, _, Some(ef)) => check_multiresolution(
                ef,
                &fit.values,
                opts.family,
                bounds_spec,
                mean_values.as_deref(),
            )?,
            _ => unreachable!(),
        };

        trace.lambdas.push(lambda.gaps().to_vec());
        trace.violations.push(violations.clone());
        trace.objectives.push(fit.objective);

        if violations.is_empty() {
            return Ok((
                SqueezeResult {
                    fit,
                    mean_values,
                    lambda,
                    iterations: iter,
                },
                trace,
            ));
        }

        // shrink the penalties on every gap from j-1 through k
        let mut touched = vec![false; n.saturating_sub(1)];
        for &(j, k) in &violations {
            let lo = j.saturating_sub(1).max(1);
            let hi = k.min(n - 1);
            for g in lo..=hi {
                touched[g - 1] = true;
            }
        }
        if !touched.iter().any(|&t| t) {
            // no adjustable gap (n = 1); the fit cannot improve
            return Ok((
                SqueezeResult {
                    fit,
                    mean_values,
                    lambda,
                    iterations: iter,
                },
                trace,
            ));
        }
        for (g, &t) in touched.iter().enumerate() {
            if t {
                lambda.scale_gap(g + 1, opts.gamma);
            }
        }
    }
    Err(Error::NonTermination(format!(
        "local squeezing did not satisfy the multiresolution criterion within {} iterations",
        opts.max_iter
    )))
}
