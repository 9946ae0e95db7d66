//! Regression inputs: design points with tie blocks, and per-gap penalties.

use crate::error::{Error, Result};

/// A regression data set: strictly increasing design points after tie
/// grouping, responses in design order, and the partition of observations
/// into tie blocks.
#[derive(Debug, Clone)]
pub struct DataSet {
    /// Distinct design points, strictly increasing (one per block).
    x: Vec<f64>,
    /// Responses, one per original observation, sorted by design point
    /// (stable within ties).
    y: Vec<f64>,
    /// Exclusive end offset of each tie block; last entry equals `y.len()`.
    block_ends: Vec<usize>,
}

impl DataSet {
    /// Builds a data set from (x, y) pairs. Pairs are stably sorted by x and
    /// equal design points are grouped into tie blocks.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidData(format!(
                "x has {} entries but y has {}",
                x.len(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::InvalidData("empty data set".into()));
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidData(format!("x[{i}] is not finite")));
            }
        }
        for (i, &v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidData(format!("y[{i}] is not finite")));
            }
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let xs_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();

        let mut xd = Vec::new();
        let mut block_ends = Vec::new();
        let mut i = 0;
        while i < xs_sorted.len() {
            let v = xs_sorted[i];
            let mut j = i + 1;
            while j < xs_sorted.len() && xs_sorted[j] == v {
                j += 1;
            }
            xd.push(v);
            block_ends.push(j);
            i = j;
        }
        Ok(DataSet {
            x: xd,
            y: ys,
            block_ends,
        })
    }

    /// Data set on the implicit design 1..n (no ties).
    pub fn from_responses(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        let x = (1..=n).map(|i| i as f64).collect();
        DataSet::new(x, y)
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of tie blocks (distinct design points).
    pub fn blocks(&self) -> usize {
        self.block_ends.len()
    }

    pub fn has_ties(&self) -> bool {
        self.blocks() < self.n()
    }

    /// Observation range `lo..hi` (half-open, 0-based) of block `b`.
    pub fn block_range(&self, b: usize) -> (usize, usize) {
        let lo = if b == 0 { 0 } else { self.block_ends[b - 1] };
        (lo, self.block_ends[b])
    }

    pub fn block_ends(&self) -> &[usize] {
        &self.block_ends
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Per-observation design points (block value repeated within ties).
    pub fn x_expanded(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n());
        for b in 0..self.blocks() {
            let (lo, hi) = self.block_range(b);
            out.extend(std::iter::repeat(self.x[b]).take(hi - lo));
        }
        out
    }
}

/// Per-gap total-variation penalties `lambda_1..lambda_{n-1}`. Gap `k`
/// separates observations `k` and `k+1` (1-based); the boundary convention
/// `lambda_0 = lambda_n = 0` is built into [`LambdaVector::at`].
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector {
    gaps: Vec<f64>,
}

impl LambdaVector {
    /// Per-gap penalties; every entry must be finite and strictly positive.
    pub fn new(gaps: Vec<f64>) -> Result<Self> {
        for (i, &v) in gaps.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "lambda[{}] = {} must be finite and > 0",
                    i + 1,
                    v
                )));
            }
        }
        Ok(LambdaVector { gaps })
    }

    /// Broadcasts a scalar penalty to all `n - 1` gaps.
    pub fn constant(lambda: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidData("empty data set".into()));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} must be finite and > 0"
            )));
        }
        Ok(LambdaVector {
            gaps: vec![lambda; n - 1],
        })
    }

    /// Number of observations this penalty vector is sized for.
    pub fn n(&self) -> usize {
        self.gaps.len() + 1
    }

    /// `lambda_k` for `k = 0..=n`, with `lambda_0 = lambda_n = 0`.
    pub fn at(&self, k: usize) -> f64 {
        if k == 0 || k >= self.n() {
            0.0
        } else {
            self.gaps[k - 1]
        }
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn max(&self) -> f64 {
        self.gaps.iter().cloned().fold(0.0, f64::max)
    }

    /// Scales the penalty on 1-based gap `k` by `factor`.
    pub fn scale_gap(&mut self, k: usize, factor: f64) {
        self.gaps[k - 1] *= factor;
    }
}
