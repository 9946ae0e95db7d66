//! The generalized taut-string sweep.
//!
//! A single left-to-right pass maintains two piecewise-constant candidates:
//! an antitonic-tail lower candidate `f` and an isotonic-tail upper
//! candidate `g`. Both agree on a growing prefix; on the live suffix the
//! cumulative derivative sums of `g` are pinned to `+lambda` at its segment
//! boundaries and those of `f` to `-lambda`. New observations enter as
//! singleton segments and are pooled leftwards through the generalized
//! derivative inverses whenever monotonicity fails. When the candidates
//! cross, the crossing side is rebuilt from the other side's leading
//! segment and the agreed prefix advances. The extracted vector satisfies
//! the exact optimality conditions of the penalized problem, and among all
//! tube-feasible vectors it has the fewest local extremes.

use crate::data::{DataSet, LambdaVector};
use crate::error::{Error, Result};
use crate::loss::{Blocked, LossModel};

/// A maximal constant run of a fitted vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// First observation of the run (0-based).
    pub start: usize,
    /// Last observation of the run (0-based, inclusive).
    pub end: usize,
    pub value: f64,
}

/// A fitted vector with its segment partition, the cumulative one-sided
/// derivative sums (the "tube" diagnostic), and the objective value.
#[derive(Debug, Clone)]
pub struct Fit {
    pub values: Vec<f64>,
    pub segments: Vec<Segment>,
    /// `cumsum_left[k] = sum_{i <= k} R'_i(value_i -)` for k = 1..n (1-based).
    pub cumsum_left: Vec<f64>,
    pub cumsum_right: Vec<f64>,
    pub objective: f64,
}

impl Fit {
    /// Assembles the diagnostics of an arbitrary vector under a model and
    /// penalty. Segments come from exact value equality: the sweep assigns
    /// one number to a pooled range, so equal means same segment.
    pub fn from_values<M: LossModel + ?Sized>(
        model: &M,
        lambda: &LambdaVector,
        values: Vec<f64>,
    ) -> Fit {
        let n = values.len();
        let mut segments = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || values[i] != values[start] {
                segments.push(Segment {
                    start,
                    end: i - 1,
                    value: values[start],
                });
                start = i;
            }
        }
        let mut cumsum_left = Vec::with_capacity(n);
        let mut cumsum_right = Vec::with_capacity(n);
        let mut accl = 0.0;
        let mut accr = 0.0;
        for (i, &v) in values.iter().enumerate() {
            accl += model.left_deriv(i, v);
            accr += model.right_deriv(i, v);
            cumsum_left.push(accl);
            cumsum_right.push(accr);
        }
        let objective = objective(model, lambda, &values);
        Fit {
            values,
            segments,
            cumsum_left,
            cumsum_right,
            objective,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Penalized objective `sum_i R_i(f_i) + sum_k lambda_k |f_{k+1} - f_k|`.
pub fn objective<M: LossModel + ?Sized>(model: &M, lambda: &LambdaVector, f: &[f64]) -> f64 {
    let mut t = 0.0;
    for (i, &v) in f.iter().enumerate() {
        t += model.value(i, v);
    }
    for k in 1..f.len() {
        t += lambda.at(k) * (f[k] - f[k - 1]).abs();
    }
    t
}

/// Which optimality pattern pinned the agreed prefix; decides the constant
/// tail value when the candidates never fully close.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PrefixCase {
    /// Nothing agreed yet; the prefix derivative sum is zero.
    Open,
    /// Agreement ends in a downward jump; prefix sum is `-lambda_ko`.
    Down,
    /// Agreement ends in an upward jump; prefix sum is `+lambda_ko`.
    Up,
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    /// 1-based first observation.
    start: usize,
    /// 1-based last observation, inclusive.
    end: usize,
    value: f64,
}

struct Sweep<'a, M: ?Sized> {
    model: &'a M,
    lam: &'a LambdaVector,
    n: usize,
    /// Values agreed by both candidates; length equals `ko`.
    fixed: Vec<f64>,
    ko: usize,
    case: PrefixCase,
    /// Live suffix of the lower candidate; values non-increasing.
    fseg: Vec<Seg>,
    /// Live suffix of the upper candidate; values non-decreasing.
    gseg: Vec<Seg>,
}

impl<'a, M: LossModel + ?Sized> Sweep<'a, M> {
    fn new(model: &'a M, lam: &'a LambdaVector) -> Self {
        let n = model.len();
        Sweep {
            model,
            lam,
            n,
            fixed: Vec::with_capacity(n),
            ko: 0,
            case: PrefixCase::Open,
            fseg: Vec::new(),
            gseg: Vec::new(),
        }
    }

    /// Cumulative derivative sum at the agreed prefix boundary.
    fn prefix_sum(&self) -> f64 {
        match self.case {
            PrefixCase::Open => 0.0,
            PrefixCase::Down => -self.lam.at(self.ko),
            PrefixCase::Up => self.lam.at(self.ko),
        }
    }

    /// Cumulative derivative sum of the upper candidate at the boundary
    /// ending just before 1-based observation `j`.
    fn below_g(&self, j: usize) -> f64 {
        if j == self.ko + 1 {
            self.prefix_sum()
        } else {
            self.lam.at(j - 1)
        }
    }

    fn below_f(&self, j: usize) -> f64 {
        if j == self.ko + 1 {
            self.prefix_sum()
        } else {
            -self.lam.at(j - 1)
        }
    }

    fn commit(&mut self, upto: usize, value: f64) {
        debug_assert_eq!(self.fixed.len(), self.ko);
        while self.fixed.len() < upto {
            self.fixed.push(value);
        }
        self.ko = upto;
    }

    fn step(&mut self, kk: usize) -> Result<()> {
        let lam_new = self.lam.at(kk);
        let lam_prev = self.lam.at(kk - 1);

        // extend the upper candidate and restore isotonicity
        let g_init = self
            .model
            .upper_inverse(kk - 1, kk - 1, lam_new - lam_prev)?;
        self.gseg.push(Seg {
            start: kk,
            end: kk,
            value: g_init,
        });
        while self.gseg.len() >= 2 {
            let m = self.gseg.len();
            if self.gseg[m - 2].value <= self.gseg[m - 1].value {
                break;
            }
            let j = self.gseg[m - 2].start;
            let t = lam_new - self.below_g(j);
            let v = self.model.upper_inverse(j - 1, kk - 1, t)?;
            // a merge lands between the two segment values it replaces
            debug_assert!(
                self.n > 64
                    || (v <= self.gseg[m - 2].value + 1e-7
                        && v >= self.gseg[m - 1].value - 1e-7)
            );
            self.gseg.truncate(m - 2);
            self.gseg.push(Seg {
                start: j,
                end: kk,
                value: v,
            });
        }

        // extend the lower candidate and restore antitonicity
        let f_init = self
            .model
            .lower_inverse(kk - 1, kk - 1, -lam_new + lam_prev)?;
        self.fseg.push(Seg {
            start: kk,
            end: kk,
            value: f_init,
        });
        while self.fseg.len() >= 2 {
            let m = self.fseg.len();
            if self.fseg[m - 2].value >= self.fseg[m - 1].value {
                break;
            }
            let j = self.fseg[m - 2].start;
            let t = -lam_new - self.below_f(j);
            let v = self.model.lower_inverse(j - 1, kk - 1, t)?;
            debug_assert!(
                self.n > 64
                    || (v >= self.fseg[m - 2].value - 1e-7
                        && v <= self.fseg[m - 1].value + 1e-7)
            );
            self.fseg.truncate(m - 2);
            self.fseg.push(Seg {
                start: j,
                end: kk,
                value: v,
            });
        }

        // re-establish the ordering between the candidates and grow the
        // agreed prefix as far as possible
        loop {
            if self.ko == kk {
                break;
            }
            let fh = self.fseg[0];
            let gh = self.gseg[0];
            if fh.value < gh.value {
                break;
            }
            if fh.value == gh.value {
                // candidates agree on the common leading flat
                let stop = fh.end.min(gh.end);
                let v = fh.value;
                self.trim_head(stop);
                self.commit(stop, v);
                if self.ko < kk {
                    let f_continues = self.fseg[0].value == v;
                    let g_continues = self.gseg[0].value == v;
                    match (f_continues, g_continues) {
                        (true, false) => self.case = PrefixCase::Up,
                        (false, true) => self.case = PrefixCase::Down,
                        // both still flat at v: the loop advances again and a
                        // later pass decides
                        (true, true) => {}
                        (false, false) => {
                            debug_assert!(false, "both candidates jump off a closed flat");
                            self.case = PrefixCase::Down;
                        }
                    }
                }
                continue;
            }
            // fh.value > gh.value: the candidates crossed
            if self.fseg.len() == 1 && self.gseg.len() == 1 {
                // two constant tails cannot cross in exact arithmetic; a
                // bisection-based inverse can land the coinciding roots a
                // few ulps apart, so close the step at the midpoint
                let mid = 0.5 * (fh.value + gh.value);
                debug_assert!(
                    fh.value - gh.value <= 1e-6 * (1.0 + mid.abs()),
                    "constant tails crossed by {}",
                    fh.value - gh.value
                );
                self.fseg.clear();
                self.gseg.clear();
                self.commit(kk, mid);
                continue;
            }
            // rebuild the side that was pooled into a single segment from
            // the other side's leading segment
            if self.fseg.len() >= 2 {
                let k1 = fh.end;
                let vf = fh.value;
                self.fseg.remove(0);
                let t = lam_new + self.lam.at(k1);
                let w = self.model.upper_inverse(k1, kk - 1, t)?;
                self.gseg.clear();
                self.gseg.push(Seg {
                    start: k1 + 1,
                    end: kk,
                    value: w,
                });
                self.commit(k1, vf);
                self.case = PrefixCase::Down;
            } else {
                debug_assert!(self.gseg.len() >= 2, "crossing with two constant tails");
                let k1 = gh.end;
                let vg = gh.value;
                self.gseg.remove(0);
                let t = -lam_new - self.lam.at(k1);
                let w = self.model.lower_inverse(k1, kk - 1, t)?;
                self.fseg.clear();
                self.fseg.push(Seg {
                    start: k1 + 1,
                    end: kk,
                    value: w,
                });
                self.commit(k1, vg);
                self.case = PrefixCase::Up;
            }
        }
        Ok(())
    }

    /// Drops the parts of both head segments at or before observation `stop`.
    fn trim_head(&mut self, stop: usize) {
        for segs in [&mut self.fseg, &mut self.gseg] {
            if segs[0].end <= stop {
                segs.remove(0);
            } else {
                segs[0].start = stop + 1;
            }
        }
    }

    fn extract(mut self) -> Result<Vec<f64>> {
        if self.ko < self.n {
            let r = match self.case {
                PrefixCase::Down => self.gseg[0].value,
                PrefixCase::Up => self.fseg[0].value,
                PrefixCase::Open => {
                    // one constant segment overall; any value between the
                    // candidate heads zeroes the total derivative sum
                    let lo = self.fseg[0].value;
                    let hi = self.gseg[0].value;
                    self.model.lower_inverse(0, self.n - 1, 0.0)?.clamp(lo, hi)
                }
            };
            let ko = self.ko;
            self.commit(self.n, r);
            debug_assert!(ko <= self.n);
        }
        Ok(self.fixed)
    }

    /// Exhaustive invariant check of the live state; test builds only, and
    /// only for small problems.
    #[cfg(debug_assertions)]
    fn validate(&self, kk: usize) {
        if self.n > 64 || self.ko == kk {
            return;
        }
        let tol = 1e-7 * (1.0 + self.lam.max());
        let mut f = self.fixed.clone();
        for s in &self.fseg {
            for _ in s.start..=s.end {
                f.push(s.value);
            }
        }
        let mut g = self.fixed.clone();
        for s in &self.gseg {
            for _ in s.start..=s.end {
                g.push(s.value);
            }
        }
        assert_eq!(f.len(), kk);
        assert_eq!(g.len(), kk);
        for i in 0..kk {
            if i < self.ko {
                assert_eq!(f[i], g[i]);
            } else {
                assert!(g[i] > f[i], "ordering violated at {i}");
            }
        }
        for i in self.ko + 1..kk {
            if i > self.ko {
                assert!(f[i] <= f[i - 1] + tol, "lower candidate not antitonic");
                assert!(g[i] >= g[i - 1] - tol, "upper candidate not isotonic");
            }
        }
        let mut sf = 0.0;
        let mut sg = 0.0;
        for k in 1..=kk {
            sf += self.model.right_deriv(k - 1, f[k - 1]);
            sg += self.model.right_deriv(k - 1, g[k - 1]);
            let lk = self.lam.at(k);
            assert!(
                sg <= lk + tol,
                "upper partial sum {sg} exceeds {lk} at {k}"
            );
            assert!(
                sf >= -lk - tol,
                "lower partial sum {sf} below {} at {k}",
                -lk
            );
            if k == kk {
                assert!((sg - lk).abs() <= tol, "upper sum not pinned at step end");
                assert!((sf + lk).abs() <= tol, "lower sum not pinned at step end");
            } else if k > self.ko {
                if g[k] > g[k - 1] {
                    assert!((sg - lk).abs() <= tol, "missing equality in upper sums");
                }
                if f[k] < f[k - 1] {
                    assert!((sf + lk).abs() <= tol, "missing equality in lower sums");
                }
            }
        }
    }
}

/// Minimizes the penalized objective for a model with continuous, strongly
/// coercive derivatives. Returns the fitted vector with diagnostics.
pub fn fit_taut<M: LossModel + ?Sized>(model: &M, lambda: &LambdaVector) -> Result<Fit> {
    let n = model.len();
    if n == 0 {
        return Err(Error::InvalidData("empty model".into()));
    }
    if lambda.n() != n {
        return Err(Error::InvalidParameter(format!(
            "penalty vector sized for {} observations, model has {n}",
            lambda.n()
        )));
    }
    let mut sweep = Sweep::new(model, lambda);
    for kk in 1..=n {
        sweep.step(kk)?;
        #[cfg(debug_assertions)]
        sweep.validate(kk);
    }
    let values = sweep.extract()?;
    Ok(Fit::from_values(model, lambda, values))
}

/// Taut-string fit with duplicate design points: the model is pooled per
/// tie block, the sweep runs on blocks with per-block-gap penalties, and
/// the block values are expanded back to the observations.
///
/// Returns the block-scale fit and the per-observation expansion.
pub fn fit_taut_ties<M: LossModel + ?Sized>(
    model: &M,
    data: &DataSet,
    lambda: &LambdaVector,
) -> Result<(Fit, Vec<f64>)> {
    if model.len() != data.n() {
        return Err(Error::InvalidData(format!(
            "model has {} observations, data set has {}",
            model.len(),
            data.n()
        )));
    }
    if lambda.n() != data.blocks() {
        return Err(Error::InvalidParameter(format!(
            "penalty vector sized for {} blocks, data set has {}",
            lambda.n(),
            data.blocks()
        )));
    }
    let blocked = Blocked::new(model, data.block_ends())?;
    let fit = fit_taut(&blocked, lambda)?;
    let mut expanded = Vec::with_capacity(data.n());
    for b in 0..data.blocks() {
        let (lo, hi) = data.block_range(b);
        expanded.extend(std::iter::repeat(fit.values[b]).take(hi - lo));
    }
    Ok((fit, expanded))
}

/// A priori range for every minimizer of the penalized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeBounds {
    pub lo: f64,
    pub hi: f64,
    /// Whether minimizers lie strictly inside (differentiable losses with
    /// non-constant responses).
    pub open: bool,
}

/// Bounds the coordinates of any minimizer by the response range. With a
/// differentiable loss and non-constant responses the interval is open.
pub fn range_bounds<M: LossModel + ?Sized>(model: &M, strict: bool) -> Result<RangeBounds> {
    let y = model.responses().ok_or_else(|| {
        Error::DegenerateRange("model does not expose its responses".into())
    })?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in y {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let open = model.differentiable() && hi > lo;
    if strict && !open {
        return Err(Error::DegenerateRange(
            "constant responses admit no strict bounds".into(),
        ));
    }
    Ok(RangeBounds { lo, hi, open })
}
