//! Independent optimality certificates and brute-force oracles.
//!
//! Nothing here shares code with the sweep: certificates recompute
//! derivative sums from scratch, the isotonic oracle is a separate
//! pool-adjacent-violators pass, and the exhaustive minimizers search the
//! candidate space directly. Together they certify solver outputs without
//! trusting the solver.

use crate::data::LambdaVector;
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::signals::Rng;
use crate::taut::objective;

/// Which optimality condition a certificate checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertKind {
    /// One-sided subgradient inequalities over all index ranges.
    OneSided,
    /// Cumulative derivative sums pinned to the penalty tube.
    CumulativeSums,
    /// Block conditions of the constrained monotone minimizer.
    IsotonicBlocks,
    /// Agreement of monotone stretches with the constrained minimizer.
    MonotoneRuns,
}

impl CertKind {
    pub fn name(self) -> &'static str {
        match self {
            CertKind::OneSided => "one-sided-subgradient",
            CertKind::CumulativeSums => "cumulative-sums",
            CertKind::IsotonicBlocks => "isotonic-blocks",
            CertKind::MonotoneRuns => "monotone-runs",
        }
    }
}

/// Result of an exact optimality check: the worst violation magnitude and
/// where it occurred (1-based range).
#[derive(Debug, Clone)]
pub struct Certificate {
    pub pass: bool,
    pub worst: f64,
    pub location: (usize, usize),
    pub kind: CertKind,
}

impl Certificate {
    fn from_worst(worst: f64, location: (usize, usize), tol: f64, kind: CertKind) -> Self {
        Certificate {
            pass: worst <= tol,
            worst,
            location,
            kind,
        }
    }
}

fn sign_lower(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn sign_upper(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn scaled_tol(tol: f64, lambda: &LambdaVector) -> f64 {
    tol * 1.0f64.max(lambda.max())
}

/// Exact minimizer check for arbitrary convex losses, via the one-sided
/// subgradient inequalities over every index range. Runs in O(n) using
/// prefix sums and running extremes.
pub fn check_optimality<M: LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    f: &[f64],
    tol: f64,
) -> Certificate {
    let n = f.len();
    let tol = scaled_tol(tol, lambda);
    // neighbor differences with zero boundary penalties
    let jump_in = |j: usize| -> f64 {
        // f_{j-1} - f_j with lambda_{j-1} weight (vanishes at j = 1)
        if j == 1 {
            0.0
        } else {
            f[j - 2] - f[j - 1]
        }
    };
    let jump_out = |k: usize| -> f64 {
        if k == n {
            0.0
        } else {
            f[k] - f[k - 1]
        }
    };

    let mut worst = 0.0f64;
    let mut loc = (1, 1);

    // condition A: sum_{j..k} R'(f+) >= lam_{j-1} s_(in) + lam_k s_(out)
    // reshaped as B[k] >= max_{j <= k} A[j]
    let mut prefix_right = 0.0;
    let mut prefix_rights = Vec::with_capacity(n + 1);
    prefix_rights.push(0.0);
    for (i, &v) in f.iter().enumerate() {
        prefix_right += model.right_deriv(i, v);
        prefix_rights.push(prefix_right);
    }
    let mut best_a = f64::NEG_INFINITY;
    let mut best_a_j = 1;
    for k in 1..=n {
        let a = prefix_rights[k - 1] + lambda.at(k - 1) * sign_lower(jump_in(k));
        if a > best_a {
            best_a = a;
            best_a_j = k;
        }
        let b = prefix_rights[k] - lambda.at(k) * sign_lower(jump_out(k));
        let excess = best_a - b;
        if excess > worst {
            worst = excess;
            loc = (best_a_j, k);
        }
    }

    // condition B: sum_{j..k} R'(f-) <= lam_{j-1} s^(in) + lam_k s^(out)
    let mut prefix_left = 0.0;
    let mut prefix_lefts = Vec::with_capacity(n + 1);
    prefix_lefts.push(0.0);
    for (i, &v) in f.iter().enumerate() {
        prefix_left += model.left_deriv(i, v);
        prefix_lefts.push(prefix_left);
    }
    let mut best_d = f64::INFINITY;
    let mut best_d_j = 1;
    for k in 1..=n {
        let d = prefix_lefts[k - 1] + lambda.at(k - 1) * sign_upper(jump_in(k));
        if d < best_d {
            best_d = d;
            best_d_j = k;
        }
        let c = prefix_lefts[k] - lambda.at(k) * sign_upper(jump_out(k));
        let excess = c - best_d;
        if excess > worst {
            worst = excess;
            loc = (best_d_j, k);
        }
    }

    Certificate::from_worst(worst, loc, tol, CertKind::OneSided)
}

/// Exact minimizer check for differentiable losses: cumulative derivative
/// sums stay inside the penalty tube, touch the boundary at every jump in
/// the jump's direction, and vanish in total.
pub fn check_optimality_smooth<M: LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    f: &[f64],
    tol: f64,
) -> Result<Certificate> {
    if !model.differentiable() {
        return Err(Error::UnsupportedCertificate(
            "cumulative-sum certificate needs a differentiable model; use the one-sided check"
                .into(),
        ));
    }
    let n = f.len();
    let tol = scaled_tol(tol, lambda);
    let mut worst = 0.0f64;
    let mut loc = (1, 1);
    let mut c = 0.0;
    for k in 1..=n {
        c += model.right_deriv(k - 1, f[k - 1]);
        let lk = lambda.at(k);
        let mut excess = c.abs() - lk;
        if k < n {
            if f[k] > f[k - 1] {
                excess = excess.max((c - lk).abs());
            } else if f[k] < f[k - 1] {
                excess = excess.max((c + lk).abs());
            }
        } else {
            excess = excess.max(c.abs());
        }
        if excess > worst {
            worst = excess;
            loc = (k, k);
        }
    }
    Ok(Certificate::from_worst(worst, loc, tol, CertKind::CumulativeSums))
}

/// An extremum interval of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtremumInterval {
    /// 0-based inclusive index range.
    pub start: usize,
    pub end: usize,
    pub is_max: bool,
}

/// Local extreme segments of a vector.
#[derive(Debug, Clone)]
pub struct ExtremaSummary {
    pub intervals: Vec<ExtremumInterval>,
    n: usize,
}

impl ExtremaSummary {
    /// All local extreme segments: constant runs strictly above (below)
    /// every existing neighbor, excluding the full range.
    pub fn total(&self) -> usize {
        self.intervals.len()
    }

    pub fn maxima(&self) -> usize {
        self.intervals.iter().filter(|e| e.is_max).count()
    }

    pub fn minima(&self) -> usize {
        self.intervals.iter().filter(|e| !e.is_max).count()
    }

    /// Interior extreme segments only (neither endpoint touches the
    /// boundary). This is the convention the simulation study tabulates.
    pub fn interior(&self) -> usize {
        self.intervals
            .iter()
            .filter(|e| e.start > 0 && e.end < self.n - 1)
            .count()
    }
}

/// Counts local extreme segments. Values within `tol` of a segment's first
/// value are grouped into that segment before comparison.
pub fn count_extrema(f: &[f64], tol: f64) -> ExtremaSummary {
    let n = f.len();
    let mut segs: Vec<(usize, usize, f64)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || (f[i] - f[start]).abs() > tol {
            segs.push((start, i - 1, f[start]));
            start = i;
        }
    }
    let mut intervals = Vec::new();
    for (s, &(a, b, v)) in segs.iter().enumerate() {
        if a == 0 && b == n - 1 {
            continue;
        }
        let left = if s > 0 { Some(segs[s - 1].2) } else { None };
        let right = if s + 1 < segs.len() {
            Some(segs[s + 1].2)
        } else {
            None
        };
        let is_max = left.map_or(true, |l| l < v) && right.map_or(true, |r| r < v);
        let is_min = left.map_or(true, |l| l > v) && right.map_or(true, |r| r > v);
        if is_max || is_min {
            intervals.push(ExtremumInterval {
                start: a,
                end: b,
                is_max,
            });
        }
    }
    ExtremaSummary { intervals, n }
}

/// Monotone (isotonic) minimizer of the unpenalized loss sum over an
/// inclusive 0-based range, by pooling adjacent violating blocks at their
/// pooled derivative roots.
pub fn isotonic_oracle<M: LossModel + ?Sized>(
    model: &M,
    lo: usize,
    hi: usize,
) -> Result<Vec<f64>> {
    pava(model, lo, hi, false)
}

/// Antitonic counterpart of [`isotonic_oracle`].
pub fn antitonic_oracle<M: LossModel + ?Sized>(
    model: &M,
    lo: usize,
    hi: usize,
) -> Result<Vec<f64>> {
    pava(model, lo, hi, true)
}

fn pava<M: LossModel + ?Sized>(
    model: &M,
    lo: usize,
    hi: usize,
    antitonic: bool,
) -> Result<Vec<f64>> {
    let mut blocks: Vec<(usize, usize, f64)> = Vec::new();
    for i in lo..=hi {
        blocks.push((i, i, model.lower_inverse(i, i, 0.0)?));
        while blocks.len() >= 2 {
            let m = blocks.len();
            let violates = if antitonic {
                blocks[m - 2].2 < blocks[m - 1].2
            } else {
                blocks[m - 2].2 > blocks[m - 1].2
            };
            if !violates {
                break;
            }
            let (s, _, _) = blocks[m - 2];
            let (_, e, _) = blocks[m - 1];
            blocks.truncate(m - 2);
            blocks.push((s, e, model.lower_inverse(s, e, 0.0)?));
        }
    }
    let mut out = Vec::with_capacity(hi - lo + 1);
    for &(s, e, v) in &blocks {
        out.extend(std::iter::repeat(v).take(e - s + 1));
    }
    Ok(out)
}

/// Checks the exact block conditions of a constrained monotone minimizer:
/// within every constant block, left-derivative prefix sums from the block
/// start stay at or below zero and right-derivative suffix sums to the
/// block end stay at or above zero.
pub fn check_isotonic_optimality<M: LossModel + ?Sized>(
    model: &M,
    lo: usize,
    values: &[f64],
    tol: f64,
) -> Certificate {
    let n = values.len();
    let mut worst = 0.0f64;
    let mut locw = (1, 1);
    let mut a = 0;
    while a < n {
        let mut b = a;
        while b + 1 < n && values[b + 1] == values[a] {
            b += 1;
        }
        let v = values[a];
        // prefix sums of left derivatives from the block start
        let mut s = 0.0;
        for k in a..=b {
            s += model.left_deriv(lo + k, v);
            if s > worst {
                worst = s;
                locw = (lo + a + 1, lo + k + 1);
            }
        }
        // suffix sums of right derivatives up to the block end
        let mut s = 0.0;
        for j in (a..=b).rev() {
            s += model.right_deriv(lo + j, v);
            if -s > worst {
                worst = -s;
                locw = (lo + j + 1, lo + b + 1);
            }
        }
        a = b + 1;
    }
    Certificate {
        pass: worst <= tol,
        worst,
        location: locw,
        kind: CertKind::IsotonicBlocks,
    }
}

/// Checks that every maximal interior monotone stretch of a fit (with
/// constant penalty across its gaps) coincides with the constrained
/// monotone minimizer of the same observations.
pub fn check_monotone_runs<M: LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    f: &[f64],
    tol: f64,
) -> Result<Certificate> {
    let n = f.len();
    let mut worst = 0.0f64;
    let mut loc = (1, 1);
    for increasing in [true, false] {
        let le = |a: f64, b: f64| if increasing { a <= b } else { a >= b };
        let lt = |a: f64, b: f64| if increasing { a < b } else { a > b };
        // a run is f[a-1] < f[a] <= ... <= f[b] < f[b+1] with a >= 1 and
        // b <= n-2 (0-based), comparisons flipped for decreasing runs
        let mut a = 1;
        while a + 1 < n {
            if !lt(f[a - 1], f[a]) {
                a += 1;
                continue;
            }
            // end of the monotone stretch starting at a
            let mut c = a;
            while c + 1 < n && le(f[c], f[c + 1]) {
                c += 1;
            }
            // latest strict step inside the stretch marks the maximal run
            let b = (a..c).rev().find(|&p| lt(f[p], f[p + 1]));
            if let Some(b) = b {
                // constant penalty across 1-based gaps a..b+1
                let lam0 = lambda.at(a);
                if (a..=b + 1).all(|g| lambda.at(g) == lam0) {
                    let oracle = if increasing {
                        isotonic_oracle(model, a, b)?
                    } else {
                        antitonic_oracle(model, a, b)?
                    };
                    for (off, &ov) in oracle.iter().enumerate() {
                        let d = (ov - f[a + off]).abs();
                        if d > worst {
                            worst = d;
                            loc = (a + 1, b + 1);
                        }
                    }
                }
            }
            a = c + 1;
        }
    }
    Ok(Certificate::from_worst(worst, loc, tol, CertKind::MonotoneRuns))
}

/// How the exhaustive oracle searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteMode {
    /// Exhaustive search over response-value grids; exact for losses whose
    /// minimizers live on order statistics. Needs n <= 7.
    Enumerate,
    /// Coordinate descent from a per-axis grid with golden-section
    /// refinement, multi-start. For smooth losses; needs n <= 12.
    GridPolish,
}

/// Independent minimizer search. Returns the best objective value found and
/// its argument.
pub fn brute_force_min<M: LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    mode: BruteMode,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let n = model.len();
    let y = model
        .responses()
        .ok_or_else(|| Error::InvalidData("oracle needs response values".into()))?
        .to_vec();
    match mode {
        BruteMode::Enumerate => {
            if n > 7 {
                return Err(Error::SizeLimit(format!(
                    "enumeration oracle supports n <= 7, got {n}"
                )));
            }
            let mut grid = y.clone();
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            grid.dedup();
            let k = grid.len();
            let mut idx = vec![0usize; n];
            let mut best = (f64::INFINITY, vec![grid[0]; n]);
            let mut cand = vec![0.0; n];
            loop {
                for (i, &g) in idx.iter().enumerate() {
                    cand[i] = grid[g];
                }
                let t = objective(model, lambda, &cand);
                if t < best.0 {
                    best = (t, cand.clone());
                }
                // odometer increment
                let mut pos = 0;
                loop {
                    if pos == n {
                        return Ok(best);
                    }
                    idx[pos] += 1;
                    if idx[pos] < k {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
        BruteMode::GridPolish => {
            if n > 12 {
                return Err(Error::SizeLimit(format!(
                    "grid oracle supports n <= 12, got {n}"
                )));
            }
            let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
            let mut rng = Rng::new(seed);
            let mut best = (f64::INFINITY, vec![0.0; n]);
            for start in 0..5 {
                let mut f: Vec<f64> = if start == 0 {
                    y.clone()
                } else {
                    (0..n).map(|_| rng.uniform_in(lo, hi)).collect()
                };
                let mut t = objective(model, lambda, &f);
                for _cycle in 0..500 {
                    let before = t;
                    for i in 0..n {
                        let eval = |v: f64, f: &mut Vec<f64>| -> f64 {
                            let old = f[i];
                            f[i] = v;
                            let t = objective(model, lambda, f);
                            f[i] = old;
                            t
                        };
                        // 20-point scan
                        let mut lo_i = lo;
                        let mut hi_i = hi;
                        let mut bv = f[i];
                        let mut bt = t;
                        for s in 0..20 {
                            let v = lo + (hi - lo) * s as f64 / 19.0;
                            let tv = eval(v, &mut f);
                            if tv < bt {
                                bt = tv;
                                bv = v;
                            }
                        }
                        let cell = (hi - lo) / 19.0;
                        lo_i = lo_i.max(bv - cell);
                        hi_i = hi_i.min(bv + cell);
                        // golden-section refinement on the bracketing cell
                        let phi = 0.5 * (3.0 - 5.0f64.sqrt());
                        let (mut a, mut b) = (lo_i, hi_i);
                        let mut x1 = a + phi * (b - a);
                        let mut x2 = b - phi * (b - a);
                        let mut t1 = eval(x1, &mut f);
                        let mut t2 = eval(x2, &mut f);
                        for _ in 0..80 {
                            if t1 <= t2 {
                                b = x2;
                                x2 = x1;
                                t2 = t1;
                                x1 = a + phi * (b - a);
                                t1 = eval(x1, &mut f);
                            } else {
                                a = x1;
                                x1 = x2;
                                t1 = t2;
                                x2 = b - phi * (b - a);
                                t2 = eval(x2, &mut f);
                            }
                            if b - a < 1e-12 {
                                break;
                            }
                        }
                        let (vc, tc) = if t1 <= t2 { (x1, t1) } else { (x2, t2) };
                        if tc < bt {
                            bt = tc;
                            bv = vc;
                        }
                        f[i] = bv;
                        t = bt;
                    }
                    if before - t <= 1e-10 {
                        break;
                    }
                }
                if t < best.0 {
                    best = (t, f);
                }
            }
            Ok(best)
        }
    }
}

/// Whether a vector satisfies the penalty-tube feasibility condition
/// `|sum_{i<=k} R'_i(f_i)| <= lambda_k` for all k.
pub fn tube_feasible<M: LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    f: &[f64],
) -> bool {
    let mut c = 0.0;
    for k in 1..=f.len() {
        c += model.right_deriv(k - 1, f[k - 1]);
        if c.abs() > lambda.at(k) + 1e-12 {
            return false;
        }
    }
    true
}

/// Outcome of the randomized tube search.
#[derive(Debug, Clone)]
pub struct TubeSearchOutcome {
    /// Feasible vectors examined (includes shrunken proposals).
    pub feasible: usize,
    /// Fewest local extreme segments seen among feasible draws.
    pub min_extrema: usize,
    /// Smallest value of `max_J draw - max_J fit` over local maxima J, and
    /// of `min_J fit - min_J draw` over local minima; nonnegative when the
    /// fit is extremal-minimal.
    pub worst_margin: f64,
}

/// Samples random tube-feasible vectors around a fit and reports the
/// fewest extreme segments seen plus the worst per-extremum margin. A
/// minimizer produced by the sweep should never be beaten. Draws whose
/// direction leaves the tube at an active constraint are rejected; the
/// search keeps going until `trials` feasible vectors were examined (or
/// twenty times as many proposals).
pub fn random_tube_search<M: LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    fit: &[f64],
    trials: usize,
    rng: &mut Rng,
) -> TubeSearchOutcome {
    let n = fit.len();
    let summary = count_extrema(fit, 1e-9);
    let spread = {
        let lo = fit.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo).max(1.0)
    };
    let scales = [0.02, 0.1, 0.5];
    let mut feasible = 0;
    let mut min_extrema = usize::MAX;
    let mut worst_margin = f64::INFINITY;
    let mut draw = vec![0.0; n];
    let mut trial = 0usize;
    while feasible < trials && trial < 20 * trials {
        trial += 1;
        let a = scales[trial % scales.len()] * spread;
        for i in 0..n {
            draw[i] = fit[i] + rng.uniform_in(-a, a);
        }
        // shrink towards the fit until feasible
        let mut t = 1.0;
        let mut ok = false;
        for _ in 0..40 {
            let cand_ok = {
                let mut c = 0.0;
                let mut good = true;
                for k in 1..=n {
                    let v = fit[k - 1] + t * (draw[k - 1] - fit[k - 1]);
                    c += model.right_deriv(k - 1, v);
                    if c.abs() > lambda.at(k) + 1e-12 {
                        good = false;
                        break;
                    }
                }
                good
            };
            if cand_ok {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if !ok {
            continue;
        }
        for i in 0..n {
            draw[i] = fit[i] + t * (draw[i] - fit[i]);
        }
        feasible += 1;
        let s = count_extrema(&draw, 1e-9);
        min_extrema = min_extrema.min(s.total());
        for e in &summary.intervals {
            let (fit_ext, draw_ext) = if e.is_max {
                (
                    fit[e.start..=e.end]
                        .iter()
                        .cloned()
                        .fold(f64::NEG_INFINITY, f64::max),
                    draw[e.start..=e.end]
                        .iter()
                        .cloned()
                        .fold(f64::NEG_INFINITY, f64::max),
                )
            } else {
                (
                    -fit[e.start..=e.end].iter().cloned().fold(f64::INFINITY, f64::min),
                    -draw[e.start..=e.end].iter().cloned().fold(f64::INFINITY, f64::min),
                )
            };
            worst_margin = worst_margin.min(draw_ext - fit_ext);
        }
    }
    if min_extrema == usize::MAX {
        min_extrema = summary.total();
    }
    if !worst_margin.is_finite() {
        worst_margin = 0.0;
    }
    TubeSearchOutcome {
        feasible,
        min_extrema,
        worst_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{Quadratic, QuantileLoss};
    use crate::taut::fit_taut;

    #[test]
    fn shifted_interpolation_fails_certificates() {
        let y = vec![1.0, 2.0, 0.5, 3.0];
        let m = Quadratic::new(y.clone()).unwrap();
        let lam = LambdaVector::constant(0.1, 4).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let c = check_optimality(&m, &lam, &shifted, 1e-8);
        assert!(!c.pass);
        assert!(c.worst > 30.0);
        let c2 = check_optimality_smooth(&m, &lam, &shifted, 1e-8).unwrap();
        assert!(!c2.pass);
    }

    #[test]
    fn single_point_condition() {
        // reduces to R'(f-) <= 0 <= R'(f+)
        let m = QuantileLoss::new(vec![5.0], 0.5).unwrap();
        let lam = LambdaVector::constant(1.0, 1).unwrap();
        assert!(check_optimality(&m, &lam, &[5.0], 1e-10).pass);
        assert!(!check_optimality(&m, &lam, &[5.1], 1e-10).pass);
    }

    #[test]
    fn onesided_and_smooth_agree() {
        let mut rng = Rng::new(444);
        for case in 0..1000 {
            let n = 1 + rng.below(9);
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let m = Quadratic::new(y).unwrap();
            let lam = LambdaVector::constant(0.2 + rng.uniform(), n).unwrap();
            let f: Vec<f64> = if case % 2 == 0 {
                fit_taut(&m, &lam).unwrap().values
            } else {
                (0..n).map(|_| rng.normal() * 2.0).collect()
            };
            let a = check_optimality(&m, &lam, &f, 1e-8);
            let b = check_optimality_smooth(&m, &lam, &f, 1e-8).unwrap();
            assert_eq!(a.pass, b.pass, "disagreement on case {case}");
        }
    }

    #[test]
    fn smooth_cert_rejects_nondifferentiable() {
        let m = QuantileLoss::new(vec![1.0, 2.0], 0.5).unwrap();
        let lam = LambdaVector::constant(1.0, 2).unwrap();
        assert!(check_optimality_smooth(&m, &lam, &[1.0, 2.0], 1e-8).is_err());
    }

    #[test]
    fn constant_fit_under_huge_penalty_certifies() {
        let y = vec![1.0, 5.0, 2.0, 8.0, 0.0];
        let mean = y.iter().sum::<f64>() / 5.0;
        let m = Quadratic::new(y).unwrap();
        // larger than any centered partial sum
        let lam = LambdaVector::constant(100.0, 5).unwrap();
        let cert = check_optimality_smooth(&m, &lam, &[mean; 5], 1e-10).unwrap();
        assert!(cert.pass);
    }

    #[test]
    fn perturbed_fit_fails() {
        let m = Quadratic::new(vec![1.0, 5.0, 2.0, 8.0, 0.0]).unwrap();
        let lam = LambdaVector::constant(0.5, 5).unwrap();
        let mut f = fit_taut(&m, &lam).unwrap().values;
        assert!(check_optimality_smooth(&m, &lam, &f, 1e-8).unwrap().pass);
        f[2] += 1e-3;
        assert!(!check_optimality_smooth(&m, &lam, &f, 1e-8).unwrap().pass);
    }

    #[test]
    fn extrema_counting_conventions() {
        let s = count_extrema(&[1.0, 1.0, 1.0], 1e-9);
        assert_eq!(s.total(), 0);

        let s = count_extrema(&[0.0, 1.0, 0.0], 1e-9);
        assert_eq!(s.maxima(), 1);
        assert_eq!(s.minima(), 2);
        assert_eq!(s.total(), 3);
        assert_eq!(s.interior(), 1);

        // monotone vector: extremes at both ends under the literal
        // definition, none interior
        let s = count_extrema(&[1.0, 2.0, 3.0], 1e-9);
        assert_eq!(s.total(), 2);
        assert_eq!(s.interior(), 0);
    }

    #[test]
    fn extrema_invariant_under_monotone_transform() {
        let f: [f64; 8] = [0.3, 1.7, 1.7, 0.2, 2.5, 2.5, 2.5, 1.0];
        let g: Vec<f64> = f.iter().map(|v| (v * 1.3).exp()).collect();
        let a = count_extrema(&f, 1e-12);
        let b = count_extrema(&g, 1e-12);
        assert_eq!(a.total(), b.total());
        assert_eq!(a.interior(), b.interior());
    }

    #[test]
    fn pava_hand_traces() {
        let m = Quadratic::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(isotonic_oracle(&m, 0, 2).unwrap(), vec![1.0, 2.0, 3.0]);

        let m = Quadratic::new(vec![2.0, 1.0]).unwrap();
        assert_eq!(isotonic_oracle(&m, 0, 1).unwrap(), vec![1.5, 1.5]);

        let m = Quadratic::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(isotonic_oracle(&m, 0, 2).unwrap(), vec![2.0, 2.0, 2.0]);

        let m = Quadratic::new(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(antitonic_oracle(&m, 0, 2).unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn pava_grid_oracle_three_points() {
        let y = vec![3.0, 1.0, 2.0];
        let m = Quadratic::new(y).unwrap();
        let fit = isotonic_oracle(&m, 0, 2).unwrap();
        let mut best = (f64::INFINITY, vec![0.0; 3]);
        let steps = 60;
        for a in 0..=steps {
            for b in a..=steps {
                for c in b..=steps {
                    let f = [
                        0.5 + 3.0 * a as f64 / steps as f64,
                        0.5 + 3.0 * b as f64 / steps as f64,
                        0.5 + 3.0 * c as f64 / steps as f64,
                    ];
                    let t: f64 = (0..3).map(|i| m.value(i, f[i])).sum();
                    if t < best.0 {
                        best = (t, f.to_vec());
                    }
                }
            }
        }
        let t_fit: f64 = (0..3).map(|i| m.value(i, fit[i])).sum();
        assert!(t_fit <= best.0 + 1e-3);
    }

    #[test]
    fn isotonic_conditions_hold_exactly() {
        let mut rng = Rng::new(12);
        for _ in 0..100 {
            let n = 2 + rng.below(15);
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let m = Quadratic::new(y).unwrap();
            let iso = isotonic_oracle(&m, 0, n - 1).unwrap();
            let c = check_isotonic_optimality(&m, 0, &iso, 1e-10);
            assert!(c.pass, "worst {}", c.worst);
        }
    }

    #[test]
    fn monotone_run_example() {
        // increasing fit (1, 5, 9) at unit penalty
        let m = Quadratic::new(vec![0.0, 5.0, 10.0]).unwrap();
        let lam = LambdaVector::constant(1.0, 3).unwrap();
        let fit = fit_taut(&m, &lam).unwrap();
        assert!((fit.values[0] - 1.0).abs() < 1e-12);
        assert!((fit.values[1] - 5.0).abs() < 1e-12);
        assert!((fit.values[2] - 9.0).abs() < 1e-12);
        let cert = check_monotone_runs(&m, &lam, &fit.values, 1e-8).unwrap();
        assert!(cert.pass);
    }

    #[test]
    fn brute_force_examples() {
        let m = Quadratic::new(vec![7.0]).unwrap();
        let lam = LambdaVector::constant(1.0, 1).unwrap();
        let (v, arg) = brute_force_min(&m, &lam, BruteMode::GridPolish, 1).unwrap();
        assert!(v.abs() < 1e-9);
        assert!((arg[0] - 7.0).abs() < 1e-5);

        // two points, lambda 1/2: T(0.5, 1.5) = 0.125 + 0.125 + 0.5 = 0.75
        let m = Quadratic::new(vec![0.0, 2.0]).unwrap();
        let lam = LambdaVector::constant(0.5, 2).unwrap();
        let (v, arg) = brute_force_min(&m, &lam, BruteMode::GridPolish, 1).unwrap();
        assert!((v - 0.75).abs() < 1e-8, "value {v}");
        assert!((arg[0] - 0.5).abs() < 1e-4);
        assert!((arg[1] - 1.5).abs() < 1e-4);
    }

    #[test]
    fn brute_force_size_limits() {
        let m = Quadratic::new(vec![0.0; 8]).unwrap();
        let lam = LambdaVector::constant(1.0, 8).unwrap();
        assert!(matches!(
            brute_force_min(&m, &lam, BruteMode::Enumerate, 1),
            Err(Error::SizeLimit(_))
        ));
        let m = Quadratic::new(vec![0.0; 13]).unwrap();
        let lam = LambdaVector::constant(1.0, 13).unwrap();
        assert!(matches!(
            brute_force_min(&m, &lam, BruteMode::GridPolish, 1),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn solver_never_beaten_by_grid_oracle() {
        let mut rng = Rng::new(77);
        for _ in 0..25 {
            let n = 1 + rng.below(6);
            let y: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let m = Quadratic::new(y).unwrap();
            let lam = LambdaVector::constant(0.1 + rng.uniform(), n).unwrap();
            let fit = fit_taut(&m, &lam).unwrap();
            let (v, _) = brute_force_min(&m, &lam, BruteMode::GridPolish, 3).unwrap();
            assert!(v >= fit.objective - 1e-6);
        }
    }

    #[test]
    fn tube_feasibility_of_fits() {
        let m = Quadratic::new(vec![0.0, 3.0, -1.0, 2.0]).unwrap();
        let lam = LambdaVector::constant(0.4, 4).unwrap();
        let fit = fit_taut(&m, &lam).unwrap();
        assert!(tube_feasible(&m, &lam, &fit.values));
        // pushing a segment past the touching point breaks feasibility
        let mut bad = fit.values.clone();
        bad[0] += 0.5;
        assert!(!tube_feasible(&m, &lam, &bad));
    }

    #[test]
    fn random_search_never_beats_fit() {
        let mut rng = Rng::new(2718);
        for _ in 0..10 {
            let n = 3 + rng.below(8);
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let m = Quadratic::new(y).unwrap();
            let lam = LambdaVector::constant(0.3, n).unwrap();
            let fit = fit_taut(&m, &lam).unwrap();
            let base = count_extrema(&fit.values, 1e-9).total();
            let out = random_tube_search(&m, &lam, &fit.values, 500, &mut rng);
            assert!(out.feasible > 0);
            assert!(out.min_extrema >= base);
            assert!(out.worst_margin >= -1e-9);
        }
    }
}
