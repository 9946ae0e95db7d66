//! Convex per-observation loss families and their pooled derivative
//! inverses.
//!
//! Every model exposes one-sided derivatives `R'_i(z-)`, `R'_i(z+)` and the
//! generalized inverses of the pooled derivative over an index range,
//!
//! ```text
//! lower_inverse(j, k, t) = min { z : sum_{i=j..k} R'_i(z) >= t }
//! upper_inverse(j, k, t) = max { z : sum_{i=j..k} R'_i(z) <= t }
//! ```
//!
//! which drive the taut-string sweep. Closed forms are used where they
//! exist (quadratic, exponential family, rank losses); everything else
//! falls back to exponential bracketing plus bisection.

use crate::error::{Error, Result};

/// Absolute bisection tolerance on the argument z.
pub const INVERSE_TOL: f64 = 1e-12;

/// Bracket expansion limit; a pooled derivative that has not crossed the
/// target by here is treated as non-coercive.
const BRACKET_LIMIT: f64 = 1e18;

/// A family of convex per-observation losses `R_1..R_n`.
pub trait LossModel {
    /// Number of observations.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Loss value `R_i(z)` (0-based index).
    fn value(&self, i: usize, z: f64) -> f64;

    /// Left derivative `R'_i(z-)`.
    fn left_deriv(&self, i: usize, z: f64) -> f64;

    /// Right derivative `R'_i(z+)`.
    fn right_deriv(&self, i: usize, z: f64) -> f64;

    /// Whether the losses are differentiable everywhere (left == right).
    fn differentiable(&self) -> bool {
        true
    }

    /// Pooled left derivative over the inclusive 0-based range `j..=k`.
    fn pooled_left(&self, j: usize, k: usize, z: f64) -> f64 {
        (j..=k).map(|i| self.left_deriv(i, z)).sum()
    }

    /// Pooled right derivative over `j..=k`.
    fn pooled_right(&self, j: usize, k: usize, z: f64) -> f64 {
        (j..=k).map(|i| self.right_deriv(i, z)).sum()
    }

    /// Smallest z whose pooled derivative reaches `t` from below.
    fn lower_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        let f = |z: f64| self.pooled_right(j, k, z);
        bisect_lower(&f, t, self.bracket_hint(j, k))
    }

    /// Largest z whose pooled derivative still lies at or below `t`.
    fn upper_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        let f = |z: f64| self.pooled_left(j, k, z);
        bisect_upper(&f, t, self.bracket_hint(j, k))
    }

    /// Initial bracket for bisection-based inverses.
    fn bracket_hint(&self, _j: usize, _k: usize) -> (f64, f64) {
        (-1.0, 1.0)
    }

    /// Antiderivative of `R_i`, when available in closed form. Used by
    /// [`Smoothed`] for exact sliding averages.
    fn value_antideriv(&self, _i: usize, _z: f64) -> Option<f64> {
        None
    }

    /// Underlying responses, for models of the form `rho(z - Y_i)`.
    fn responses(&self) -> Option<&[f64]> {
        None
    }
}

/// Bisection for `min { z : f(z) >= t }` with `f` nondecreasing.
pub fn bisect_lower(f: &dyn Fn(f64) -> f64, t: f64, hint: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = hint;
    let mut width = (hi - lo).max(1.0);
    while f(hi) < t {
        lo = hi;
        hi += width;
        width *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::Coercivity(format!(
                "pooled derivative never reaches {t}"
            )));
        }
    }
    if f(lo) >= t {
        let mut w = width;
        loop {
            hi = lo;
            lo -= w;
            w *= 2.0;
            if f(lo) < t {
                break;
            }
            if lo < -BRACKET_LIMIT {
                return Err(Error::Coercivity(format!(
                    "pooled derivative exceeds {t} everywhere"
                )));
            }
        }
    }
    // invariant: f(lo) < t <= f(hi)
    for _ in 0..200 {
        if hi - lo <= INVERSE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bisection for `max { z : f(z) <= t }` with `f` nondecreasing.
pub fn bisect_upper(f: &dyn Fn(f64) -> f64, t: f64, hint: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = hint;
    let mut width = (hi - lo).max(1.0);
    while f(lo) > t {
        hi = lo;
        lo -= width;
        width *= 2.0;
        if lo < -BRACKET_LIMIT {
            return Err(Error::Coercivity(format!(
                "pooled derivative never drops to {t}"
            )));
        }
    }
    if f(hi) <= t {
        let mut w = width;
        loop {
            lo = hi;
            hi += w;
            w *= 2.0;
            if f(hi) > t {
                break;
            }
            if hi > BRACKET_LIMIT {
                return Err(Error::Coercivity(format!(
                    "pooled derivative stays below {t} everywhere"
                )));
            }
        }
    }
    // invariant: f(lo) <= t < f(hi)
    for _ in 0..200 {
        if hi - lo <= INVERSE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn minmax(y: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in y {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn check_responses(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::InvalidData("empty response vector".into()));
    }
    for (i, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidData(format!("y[{i}] is not finite")));
        }
    }
    Ok(())
}

fn prefix_sums(y: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(y.len() + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for &v in y {
        acc += v;
        p.push(acc);
    }
    p
}

// ---------------------------------------------------------------------------
// Quadratic loss: R_i(z) = (z - Y_i)^2 / 2
// ---------------------------------------------------------------------------

/// Least-squares loss; pooled inverses are shifted range means.
#[derive(Debug, Clone)]
pub struct Quadratic {
    y: Vec<f64>,
    prefix: Vec<f64>,
}

impl Quadratic {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        check_responses(&y)?;
        let prefix = prefix_sums(&y);
        Ok(Quadratic { y, prefix })
    }

    fn range_sum(&self, j: usize, k: usize) -> f64 {
        self.prefix[k + 1] - self.prefix[j]
    }
}

impl LossModel for Quadratic {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn value(&self, i: usize, z: f64) -> f64 {
        let d = z - self.y[i];
        0.5 * d * d
    }

    fn left_deriv(&self, i: usize, z: f64) -> f64 {
        z - self.y[i]
    }

    fn right_deriv(&self, i: usize, z: f64) -> f64 {
        z - self.y[i]
    }

    fn pooled_left(&self, j: usize, k: usize, z: f64) -> f64 {
        (k - j + 1) as f64 * z - self.range_sum(j, k)
    }

    fn pooled_right(&self, j: usize, k: usize, z: f64) -> f64 {
        self.pooled_left(j, k, z)
    }

    fn lower_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        let m = (k - j + 1) as f64;
        Ok((self.range_sum(j, k) + t) / m)
    }

    fn upper_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        self.lower_inverse(j, k, t)
    }

    fn value_antideriv(&self, i: usize, z: f64) -> Option<f64> {
        let d = z - self.y[i];
        Some(d * d * d / 6.0)
    }

    fn responses(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
}

// ---------------------------------------------------------------------------
// Pseudo-Huber loss with coercive quadratic tails
// ---------------------------------------------------------------------------

/// Smooth absolute-value surrogate `sqrt(delta^2 + (z - Y_i)^2)` plus
/// quadratic tails outside the response range. The tails force strongly
/// coercive derivatives without moving the minimizer, which stays inside
/// the response range.
#[derive(Debug, Clone)]
pub struct PseudoHuber {
    y: Vec<f64>,
    delta: f64,
    c1: f64,
    c2: f64,
}

impl PseudoHuber {
    pub fn new(y: Vec<f64>, delta: f64) -> Result<Self> {
        check_responses(&y)?;
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pseudo-Huber scale must be > 0, got {delta}"
            )));
        }
        let (c1, c2) = minmax(&y);
        Ok(PseudoHuber { y, delta, c1, c2 })
    }

    fn tail_value(&self, z: f64) -> f64 {
        let lo = (z - self.c1).min(0.0);
        let hi = (z - self.c2).max(0.0);
        lo * lo + hi * hi
    }

    fn tail_deriv(&self, z: f64) -> f64 {
        2.0 * (z - self.c1).min(0.0) + 2.0 * (z - self.c2).max(0.0)
    }
}

impl LossModel for PseudoHuber {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn value(&self, i: usize, z: f64) -> f64 {
        let d = z - self.y[i];
        (self.delta * self.delta + d * d).sqrt() + self.tail_value(z)
    }

    fn left_deriv(&self, i: usize, z: f64) -> f64 {
        let d = z - self.y[i];
        d / (self.delta * self.delta + d * d).sqrt() + self.tail_deriv(z)
    }

    fn right_deriv(&self, i: usize, z: f64) -> f64 {
        self.left_deriv(i, z)
    }

    fn bracket_hint(&self, _j: usize, _k: usize) -> (f64, f64) {
        (self.c1 - 1.0, self.c2 + 1.0)
    }

    fn responses(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
}

// ---------------------------------------------------------------------------
// One-parameter exponential families (negative log-likelihood)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Poisson,
    Bernoulli,
}

impl Family {
    /// Cumulant function b on the natural-parameter scale.
    pub fn cumulant(self, z: f64) -> f64 {
        match self {
            Family::Poisson => z.exp(),
            // log(1 + e^z), evaluated stably
            Family::Bernoulli => z.max(0.0) + (-z.abs()).exp().ln_1p(),
        }
    }

    /// Mean function b' (natural parameter -> mean).
    pub fn mean(self, z: f64) -> f64 {
        match self {
            Family::Poisson => z.exp(),
            Family::Bernoulli => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Inverse mean function (b')^{-1}; the argument must lie strictly
    /// inside the mean range.
    pub fn natural(self, mu: f64) -> Result<f64> {
        match self {
            Family::Poisson => {
                if mu > 0.0 {
                    Ok(mu.ln())
                } else {
                    Err(Error::Coercivity(format!(
                        "mean {mu} outside the Poisson mean range (0, inf)"
                    )))
                }
            }
            Family::Bernoulli => {
                if mu > 0.0 && mu < 1.0 {
                    Ok((mu / (1.0 - mu)).ln())
                } else {
                    Err(Error::Coercivity(format!(
                        "mean {mu} outside the Bernoulli mean range (0, 1)"
                    )))
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Bernoulli => "bernoulli",
        }
    }
}

/// Negative log-likelihood losses `R_i(z) = b(z) - z Y_i` on the natural
/// parameter scale. Individual losses need not be coercive; fitting goes
/// through the least-squares transform, and this model backs certificates.
#[derive(Debug, Clone)]
pub struct ExpFamily {
    y: Vec<f64>,
    prefix: Vec<f64>,
    family: Family,
}

impl ExpFamily {
    pub fn new(y: Vec<f64>, family: Family) -> Result<Self> {
        check_responses(&y)?;
        for (i, &v) in y.iter().enumerate() {
            let ok = match family {
                Family::Poisson => v >= 0.0 && v.fract() == 0.0,
                Family::Bernoulli => v == 0.0 || v == 1.0,
            };
            if !ok {
                return Err(Error::InvalidData(format!(
                    "y[{i}] = {v} is not a valid {} response",
                    family.name()
                )));
            }
        }
        let prefix = prefix_sums(&y);
        Ok(ExpFamily { y, prefix, family })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    fn range_sum(&self, j: usize, k: usize) -> f64 {
        self.prefix[k + 1] - self.prefix[j]
    }
}

impl LossModel for ExpFamily {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn value(&self, i: usize, z: f64) -> f64 {
        self.family.cumulant(z) - z * self.y[i]
    }

    fn left_deriv(&self, i: usize, z: f64) -> f64 {
        self.family.mean(z) - self.y[i]
    }

    fn right_deriv(&self, i: usize, z: f64) -> f64 {
        self.left_deriv(i, z)
    }

    fn pooled_left(&self, j: usize, k: usize, z: f64) -> f64 {
        (k - j + 1) as f64 * self.family.mean(z) - self.range_sum(j, k)
    }

    fn pooled_right(&self, j: usize, k: usize, z: f64) -> f64 {
        self.pooled_left(j, k, z)
    }

    fn lower_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        let m = (k - j + 1) as f64;
        self.family.natural((self.range_sum(j, k) + t) / m)
    }

    fn upper_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        self.lower_inverse(j, k, t)
    }

    fn responses(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
}

// ---------------------------------------------------------------------------
// Quantile check loss: R_i(z) = rho_beta(z - Y_i)
// ---------------------------------------------------------------------------

/// The asymmetric absolute loss `rho_beta(z) = (1 - beta) z` for `z >= 0`
/// and `beta |z|` for `z <= 0`. Not differentiable; used for objectives and
/// one-sided certificates, and as the smoothing substrate.
#[derive(Debug, Clone)]
pub struct QuantileLoss {
    y: Vec<f64>,
    beta: f64,
}

impl QuantileLoss {
    pub fn new(y: Vec<f64>, beta: f64) -> Result<Self> {
        check_responses(&y)?;
        check_beta(beta)?;
        Ok(QuantileLoss { y, beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(beta: f64, d: f64) -> f64 {
        if d >= 0.0 {
            (1.0 - beta) * d
        } else {
            -beta * d
        }
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "quantile level must lie in (0, 1), got {beta}"
        )));
    }
    Ok(())
}

impl LossModel for QuantileLoss {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn value(&self, i: usize, z: f64) -> f64 {
        QuantileLoss::rho(self.beta, z - self.y[i])
    }

    fn left_deriv(&self, i: usize, z: f64) -> f64 {
        if self.y[i] < z {
            1.0 - self.beta
        } else {
            -self.beta
        }
    }

    fn right_deriv(&self, i: usize, z: f64) -> f64 {
        if self.y[i] <= z {
            1.0 - self.beta
        } else {
            -self.beta
        }
    }

    fn differentiable(&self) -> bool {
        false
    }

    fn bracket_hint(&self, _j: usize, _k: usize) -> (f64, f64) {
        let (lo, hi) = minmax(&self.y);
        (lo - 1.0, hi + 1.0)
    }

    fn value_antideriv(&self, i: usize, z: f64) -> Option<f64> {
        let d = z - self.y[i];
        Some(if d >= 0.0 {
            0.5 * (1.0 - self.beta) * d * d
        } else {
            -0.5 * self.beta * d * d
        })
    }

    fn responses(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
}

// ---------------------------------------------------------------------------
// Sliding-average smoothing
// ---------------------------------------------------------------------------

/// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
const GL16: [(f64, f64); 8] = [
    (0.0950125098376374, 0.1894506104550685),
    (0.2816035507792589, 0.1826034150449236),
    (0.4580167776572274, 0.1691565193950025),
    (0.6178762444026438, 0.1495959888165767),
    (0.7554044083550030, 0.1246289712555339),
    (0.8656312023878318, 0.0951585116824928),
    (0.9445750230732326, 0.0622535239386479),
    (0.9894009349916499, 0.0271524594117541),
];

fn gauss16<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for &(x, w) in GL16.iter() {
        s += w * (f(c + h * x) + f(c - h * x));
    }
    s * h
}

/// Sliding-average smoothing of an arbitrary convex model:
///
/// ```text
/// R_eps(z) = (1/2eps) * integral of R over [z - eps, z + eps]
///          + max(z - 1/eps, 0)^2 / 2 + min(z + 1/eps, 0)^2 / 2
/// ```
///
/// The result is differentiable with strongly coercive derivatives and
/// converges pointwise to the original loss as eps drops to zero.
#[derive(Debug, Clone)]
pub struct Smoothed<M> {
    inner: M,
    eps: f64,
}

impl<M: LossModel> Smoothed<M> {
    pub fn new(inner: M, eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing width must be > 0, got {eps}"
            )));
        }
        Ok(Smoothed { inner, eps })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    fn tail_value(&self, z: f64) -> f64 {
        let r = 1.0 / self.eps;
        let hi = (z - r).max(0.0);
        let lo = (z + r).min(0.0);
        0.5 * hi * hi + 0.5 * lo * lo
    }

    fn tail_deriv(&self, z: f64) -> f64 {
        let r = 1.0 / self.eps;
        (z - r).max(0.0) + (z + r).min(0.0)
    }
}

impl<M: LossModel> LossModel for Smoothed<M> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn value(&self, i: usize, z: f64) -> f64 {
        let avg = match (
            self.inner.value_antideriv(i, z + self.eps),
            self.inner.value_antideriv(i, z - self.eps),
        ) {
            (Some(hi), Some(lo)) => (hi - lo) / (2.0 * self.eps),
            _ => gauss16(|u| self.inner.value(i, u), z - self.eps, z + self.eps)
                / (2.0 * self.eps),
        };
        avg + self.tail_value(z)
    }

    fn left_deriv(&self, i: usize, z: f64) -> f64 {
        (self.inner.value(i, z + self.eps) - self.inner.value(i, z - self.eps))
            / (2.0 * self.eps)
            + self.tail_deriv(z)
    }

    fn right_deriv(&self, i: usize, z: f64) -> f64 {
        self.left_deriv(i, z)
    }

    fn bracket_hint(&self, j: usize, k: usize) -> (f64, f64) {
        self.inner.bracket_hint(j, k)
    }

    fn responses(&self) -> Option<&[f64]> {
        self.inner.responses()
    }
}

// ---------------------------------------------------------------------------
// Tie blocks: one super-observation per block
// ---------------------------------------------------------------------------

/// View of a model where each tie block acts as a single observation whose
/// derivative is the within-block sum. Running the unmodified sweep on the
/// blocked view implements duplicate design points.
#[derive(Debug, Clone)]
pub struct Blocked<'a, M: ?Sized> {
    inner: &'a M,
    ends: Vec<usize>,
}

impl<'a, M: LossModel + ?Sized> Blocked<'a, M> {
    pub fn new(inner: &'a M, block_ends: &[usize]) -> Result<Self> {
        if block_ends.is_empty() || *block_ends.last().unwrap() != inner.len() {
            return Err(Error::InvalidData(
                "tie blocks do not partition the observations".into(),
            ));
        }
        Ok(Blocked {
            inner,
            ends: block_ends.to_vec(),
        })
    }

    /// Observation range `lo..hi` (half-open) of block `b`.
    fn obs_range(&self, b: usize) -> (usize, usize) {
        let lo = if b == 0 { 0 } else { self.ends[b - 1] };
        (lo, self.ends[b])
    }

    /// Maps an inclusive block range to an inclusive observation range.
    fn map_range(&self, j: usize, k: usize) -> (usize, usize) {
        let (lo, _) = self.obs_range(j);
        let (_, hi) = self.obs_range(k);
        (lo, hi - 1)
    }
}

impl<'a, M: LossModel + ?Sized> LossModel for Blocked<'a, M> {
    fn len(&self) -> usize {
        self.ends.len()
    }

    fn value(&self, b: usize, z: f64) -> f64 {
        let (lo, hi) = self.obs_range(b);
        (lo..hi).map(|i| self.inner.value(i, z)).sum()
    }

    fn left_deriv(&self, b: usize, z: f64) -> f64 {
        let (lo, hi) = self.obs_range(b);
        self.inner.pooled_left(lo, hi - 1, z)
    }

    fn right_deriv(&self, b: usize, z: f64) -> f64 {
        let (lo, hi) = self.obs_range(b);
        self.inner.pooled_right(lo, hi - 1, z)
    }

    fn differentiable(&self) -> bool {
        self.inner.differentiable()
    }

    fn pooled_left(&self, j: usize, k: usize, z: f64) -> f64 {
        let (lo, hi) = self.map_range(j, k);
        self.inner.pooled_left(lo, hi, z)
    }

    fn pooled_right(&self, j: usize, k: usize, z: f64) -> f64 {
        let (lo, hi) = self.map_range(j, k);
        self.inner.pooled_right(lo, hi, z)
    }

    fn lower_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        let (lo, hi) = self.map_range(j, k);
        self.inner.lower_inverse(lo, hi, t)
    }

    fn upper_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        let (lo, hi) = self.map_range(j, k);
        self.inner.upper_inverse(lo, hi, t)
    }

    fn bracket_hint(&self, j: usize, k: usize) -> (f64, f64) {
        let (lo, hi) = self.map_range(j, k);
        self.inner.bracket_hint(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_point_inverse_is_datum() {
        let m = Quadratic::new(vec![5.0]).unwrap();
        assert_eq!(m.right_deriv(0, 5.0), 0.0);
        assert_eq!(m.upper_inverse(0, 0, 0.0).unwrap(), 5.0);
    }

    #[test]
    fn quadratic_pooled_inverse_closed_form() {
        // sum (z - Y_i) = 1 over y = (0, 2) solves to z = 1.5
        let m = Quadratic::new(vec![0.0, 2.0]).unwrap();
        assert_eq!(m.upper_inverse(0, 1, 1.0).unwrap(), 1.5);
        assert_eq!(m.upper_inverse(0, 1, 0.0).unwrap(), 1.0);
        assert_eq!(m.upper_inverse(0, 1, -1.0).unwrap(), 0.5);
        assert_eq!(m.pooled_right(0, 1, 1.0), 0.0);
    }

    #[test]
    fn quadratic_single_point_derivative() {
        let m = Quadratic::new(vec![5.0]).unwrap();
        assert_eq!(m.pooled_right(0, 0, 7.0), 2.0);
    }

    #[test]
    fn pseudo_huber_derivative_formula() {
        let m = PseudoHuber::new(vec![3.0], 0.1).unwrap();
        assert!(m.right_deriv(0, 3.0).abs() < 1e-15);

        // z / sqrt(delta^2 + z^2) where the coercive tails vanish
        let m = PseudoHuber::new(vec![0.0, 1.0], 0.1).unwrap();
        let expect = 0.1 / (0.01f64 + 0.01).sqrt();
        assert!((m.right_deriv(0, 0.1) - expect).abs() < 1e-12);
        let fd = (m.value(0, 0.1 + 1e-7) - m.value(0, 0.1 - 1e-7)) / 2e-7;
        assert!((fd - expect).abs() < 1e-6);

        // outside [min Y, max Y] the quadratic tail contributes
        let single = PseudoHuber::new(vec![0.0], 0.1).unwrap();
        let d = single.right_deriv(0, 0.1);
        assert!((d - (expect + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn pseudo_huber_symmetric_midpoint() {
        let m = PseudoHuber::new(vec![0.0, 2.0], 0.1).unwrap();
        let z = m.upper_inverse(0, 1, 0.0).unwrap();
        assert!((z - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pseudo_huber_finite_difference() {
        let m = PseudoHuber::new(vec![0.0, 2.0, -1.0], 0.25).unwrap();
        let h = 1e-6;
        for &z in &[-1.5, -0.3, 0.0, 0.7, 1.9, 2.5] {
            for i in 0..3 {
                let fd = (m.value(i, z + h) - m.value(i, z - h)) / (2.0 * h);
                assert!(
                    (fd - m.right_deriv(i, z)).abs() < 1e-5,
                    "finite difference mismatch at z = {z}"
                );
            }
        }
    }

    #[test]
    fn pseudo_huber_rejects_bad_scale() {
        assert!(PseudoHuber::new(vec![1.0], 0.0).is_err());
        assert!(PseudoHuber::new(vec![1.0], -1.0).is_err());
    }

    #[test]
    fn expfam_derivatives() {
        let p = ExpFamily::new(vec![1.0], Family::Poisson).unwrap();
        assert!(p.right_deriv(0, 0.0).abs() < 1e-15);

        let b = ExpFamily::new(vec![1.0], Family::Bernoulli).unwrap();
        assert!((b.right_deriv(0, 0.0) + 0.5).abs() < 1e-15);

        // all-zero Poisson counts: derivative positive everywhere, no root
        let z = ExpFamily::new(vec![0.0], Family::Poisson).unwrap();
        assert!(z.right_deriv(0, -30.0) > 0.0);
        assert!(z.lower_inverse(0, 0, 0.0).is_err());
    }

    #[test]
    fn expfam_rejects_bad_support() {
        assert!(ExpFamily::new(vec![1.5], Family::Poisson).is_err());
        assert!(ExpFamily::new(vec![-1.0], Family::Poisson).is_err());
        assert!(ExpFamily::new(vec![2.0], Family::Bernoulli).is_err());
    }

    #[test]
    fn quantile_loss_branches() {
        let m = QuantileLoss::new(vec![0.0], 0.9).unwrap();
        assert!((m.value(0, 1.0) - 0.1).abs() < 1e-15);
        assert!((m.value(0, -1.0) - 0.9).abs() < 1e-15);
        assert!((m.right_deriv(0, 0.0) - 0.1).abs() < 1e-15);
        assert!((m.left_deriv(0, 0.0) + 0.9).abs() < 1e-15);
    }

    #[test]
    fn pooled_matches_naive_sum() {
        let m = PseudoHuber::new(vec![0.5, -1.0, 2.0, 0.0, 3.5], 0.3).unwrap();
        for &(j, k) in &[(0usize, 4usize), (1, 3), (2, 2), (0, 2)] {
            for &z in &[-2.0, 0.0, 1.3, 4.0] {
                let naive: f64 = (j..=k).map(|i| m.right_deriv(i, z)).sum();
                assert!((m.pooled_right(j, k, z) - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bisection_matches_closed_form_on_quadratic() {
        let m = Quadratic::new(vec![0.0, 2.0, 5.0, -1.0]).unwrap();
        for &t in &[-3.0, -0.5, 0.0, 0.7, 4.0] {
            let f = |z: f64| m.pooled_right(0, 3, z);
            let lo = bisect_lower(&f, t, (-1.0, 1.0)).unwrap();
            let hi = bisect_upper(&f, t, (-1.0, 1.0)).unwrap();
            let exact = m.lower_inverse(0, 3, t).unwrap();
            assert!((lo - exact).abs() < 1e-9);
            assert!((hi - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_ordering_and_monotonicity() {
        let m = QuantileLoss::new(vec![0.0, 1.0, 3.0], 0.5).unwrap();
        let mut prev_lo = f64::NEG_INFINITY;
        let mut prev_hi = f64::NEG_INFINITY;
        for &t in &[-1.2, -0.6, 0.0, 0.6, 1.2] {
            let lo = m.lower_inverse(0, 2, t).unwrap();
            let hi = m.upper_inverse(0, 2, t).unwrap();
            assert!(lo <= hi + 1e-9);
            assert!(lo >= prev_lo - 1e-9);
            assert!(hi >= prev_hi - 1e-9);
            prev_lo = lo;
            prev_hi = hi;
        }
    }

    #[test]
    fn smoothed_quadratic_adds_eps_sq_over_six() {
        let m = Quadratic::new(vec![1.0]).unwrap();
        for &eps in &[0.1, 0.01] {
            let s = Smoothed::new(m.clone(), eps).unwrap();
            for &z in &[0.0, 0.8, 1.0, 2.3] {
                let expect = m.value(0, z) + eps * eps / 6.0;
                // z is far from the 1/eps tails here
                assert!(
                    (s.value(0, z) - expect).abs() < 1e-12,
                    "eps = {eps}, z = {z}"
                );
            }
            assert!(s.left_deriv(0, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothed_absolute_loss_at_datum() {
        // rho(z) = |z - Y| / 2 is the beta = 1/2 quantile loss; smoothing at
        // the datum averages to eps / 4.
        let m = QuantileLoss::new(vec![2.0], 0.5).unwrap();
        for &eps in &[0.1, 0.01, 0.001] {
            let s = Smoothed::new(m.clone(), eps).unwrap();
            assert!(
                (s.value(0, 2.0) - eps / 4.0).abs() < 1e-14,
                "eps = {eps}: {}",
                s.value(0, 2.0)
            );
        }
    }

    #[test]
    fn smoothed_quadrature_fallback_matches_antiderivative() {
        // strip the antiderivative to force quadrature, compare on smooth spots
        struct NoAnti(Quadratic);
        impl LossModel for NoAnti {
            fn len(&self) -> usize {
                self.0.len()
            }
            fn value(&self, i: usize, z: f64) -> f64 {
                self.0.value(i, z)
            }
            fn left_deriv(&self, i: usize, z: f64) -> f64 {
                self.0.left_deriv(i, z)
            }
            fn right_deriv(&self, i: usize, z: f64) -> f64 {
                self.0.right_deriv(i, z)
            }
        }
        let base = Quadratic::new(vec![0.5]).unwrap();
        let s1 = Smoothed::new(NoAnti(base.clone()), 0.05).unwrap();
        let s2 = Smoothed::new(base, 0.05).unwrap();
        for &z in &[-1.0, 0.0, 0.5, 2.0] {
            assert!((s1.value(0, z) - s2.value(0, z)).abs() < 1e-13);
        }
    }

    #[test]
    fn smoothed_converges_pointwise() {
        let m = QuantileLoss::new(vec![0.0, 1.0], 0.25).unwrap();
        for i in 0..2 {
            for &z in &[-0.5, 0.3, 1.0] {
                let mut last = f64::INFINITY;
                for &eps in &[1e-1, 1e-2, 1e-3] {
                    let s = Smoothed::new(m.clone(), eps).unwrap();
                    let gap = (s.value(i, z) - m.value(i, z)).abs();
                    // the 1e-12 floor absorbs cancellation in the exact
                    // sliding average at tiny widths
                    assert!(gap <= last + 1e-12);
                    last = gap;
                }
                assert!(last < 1e-3);
            }
        }
    }

    #[test]
    fn smoothed_rejects_bad_eps() {
        let m = Quadratic::new(vec![0.0]).unwrap();
        assert!(Smoothed::new(m, 0.0).is_err());
    }

    #[test]
    fn blocked_sums_within_blocks() {
        let m = Quadratic::new(vec![1.0, 3.0, 10.0]).unwrap();
        let b = Blocked::new(&m, &[2, 3]).unwrap();
        assert_eq!(b.len(), 2);
        // block 0 pools observations 0..2
        assert_eq!(b.right_deriv(0, 2.0), (2.0 - 1.0) + (2.0 - 3.0));
        assert_eq!(b.upper_inverse(0, 0, 0.0).unwrap(), 2.0);
        assert_eq!(b.upper_inverse(0, 1, 0.0).unwrap(), 14.0 / 3.0);
    }
}
