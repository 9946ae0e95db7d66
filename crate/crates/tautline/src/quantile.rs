//! Quantile regression through the rank transform.
//!
//! The asymmetric absolute loss is nonsmooth, so the sweep cannot run on it
//! directly. Instead the responses are replaced by a rank vector, each rank
//! loss is replaced by a piecewise-quadratic surrogate whose derivative
//! ramps between the integer levels, and the sweep runs on the surrogate
//! with closed-form pooled inverses. Rounding the surrogate fit up to
//! integers and reading off order statistics yields an exact minimizer of
//! the original quantile objective, certified by the one-sided check.
//!
//! Pooled inverses need order statistics of the ranks inside an index
//! range. Segment bookkeeping by merging sorted rank lists costs time
//! proportional to segment length per merge, which loses the n log n bound
//! on adversarial inputs, so production queries go through a compact
//! wavelet structure over the (static) rank array: one O(log n) descent
//! per pooled inverse. The merge-based bookkeeping survives as
//! [`SegmentRanks`], which doubles as an independent oracle in tests.

use crate::data::LambdaVector;
use crate::error::{Error, Result};
use crate::loss::{check_beta, LossModel, QuantileLoss};
use crate::taut::{fit_taut, Fit};

/// A permutation of 1..n acting as ranks of the responses; ties are broken
/// by original index, so equal responses get consecutive ranks in input
/// order.
pub fn rank_vector(y: &[f64]) -> Vec<u32> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap().then(a.cmp(&b)));
    let mut z = vec![0u32; n];
    for (pos, &idx) in order.iter().enumerate() {
        z[idx] = pos as u32 + 1;
    }
    z
}

// ---------------------------------------------------------------------------
// Order statistics over index ranges of a static permutation
// ---------------------------------------------------------------------------

/// Wavelet tree over the rank permutation: one bit plane per value bit,
/// each with a popcount-accelerated rank directory. The k-th smallest
/// value in `z[j..=k]` falls out of one top-down descent; the whole
/// structure needs about `2 n log n` bits, so it stays cache-resident even
/// for large inputs.
#[derive(Debug, Clone)]
pub struct RankSelect {
    levels: Vec<BitPlane>,
    n: usize,
}

#[derive(Debug, Clone)]
struct BitPlane {
    words: Vec<u64>,
    /// Ones before each word.
    dir: Vec<u32>,
}

impl BitPlane {
    fn build(bits: impl Iterator<Item = bool>, n: usize) -> BitPlane {
        let nwords = n / 64 + 1;
        let mut words = vec![0u64; nwords];
        for (i, b) in bits.enumerate() {
            if b {
                words[i / 64] |= 1u64 << (i % 64);
            }
        }
        let mut dir = Vec::with_capacity(nwords);
        let mut acc = 0u32;
        for &w in &words {
            dir.push(acc);
            acc += w.count_ones();
        }
        BitPlane { words, dir }
    }

    /// Ones among the first `p` bits.
    fn rank1(&self, p: usize) -> usize {
        let w = p / 64;
        let mask = (1u64 << (p % 64)) - 1;
        self.dir[w] as usize + (self.words[w] & mask).count_ones() as usize
    }

    fn rank0(&self, p: usize) -> usize {
        p - self.rank1(p)
    }
}

impl RankSelect {
    pub fn new(z: &[u32]) -> Self {
        let n = z.len();
        let nbits = if n <= 1 {
            0
        } else {
            64 - ((n - 1) as u64).leading_zeros() as usize
        };
        // work on 0-based values, stably partitioning by bits from the top
        let mut vals: Vec<u32> = z.iter().map(|&v| v - 1).collect();
        let mut levels = Vec::with_capacity(nbits);
        for level in (0..nbits).rev() {
            let bit = 1u32 << level;
            levels.push(BitPlane::build(vals.iter().map(|&v| v & bit != 0), n));
            let mut zeros: Vec<u32> = Vec::with_capacity(n);
            let mut ones: Vec<u32> = Vec::with_capacity(n);
            for &v in &vals {
                if v & bit == 0 {
                    zeros.push(v);
                } else {
                    ones.push(v);
                }
            }
            zeros.extend_from_slice(&ones);
            vals = zeros;
        }
        RankSelect { levels, n }
    }

    /// k-th smallest value (1-based k) among `z[j..=kk]` (0-based range).
    pub fn kth(&self, j: usize, kk: usize, k: usize) -> u32 {
        debug_assert!(k >= 1 && k <= kk - j + 1);
        // each plane stably partitions the previous one by its bit, so a
        // query range maps level to level through two rank lookups
        let (mut x, mut y) = (j, kk + 1);
        let mut k = k;
        let mut value = 0u32;
        for plane in &self.levels {
            value <<= 1;
            let zeros_total = plane.rank0(self.n);
            let x0 = plane.rank0(x);
            let y0 = plane.rank0(y);
            let q_zeros = y0 - x0;
            if k <= q_zeros {
                x = x0;
                y = y0;
            } else {
                k -= q_zeros;
                value |= 1;
                x = zeros_total + (x - x0);
                y = zeros_total + (y - y0);
            }
        }
        value + 1
    }
}

// ---------------------------------------------------------------------------
// Merge-based segment bookkeeping (reference path)
// ---------------------------------------------------------------------------

/// Sorted rank lists per segment, maintained by merging adjacent sorted
/// spans whenever segments merge. The concatenation over segments stays a
/// permutation of 1..n throughout.
#[derive(Debug, Clone)]
pub struct SegmentRanks {
    flat: Vec<u32>,
    /// Exclusive end offset of each segment.
    ends: Vec<usize>,
}

impl SegmentRanks {
    /// One singleton segment per observation.
    pub fn singletons(z: &[u32]) -> Self {
        SegmentRanks {
            flat: z.to_vec(),
            ends: (1..=z.len()).collect(),
        }
    }

    pub fn segment_count(&self) -> usize {
        self.ends.len()
    }

    fn span(&self, s: usize) -> (usize, usize) {
        let lo = if s == 0 { 0 } else { self.ends[s - 1] };
        (lo, self.ends[s])
    }

    /// Sorted ranks of segment `s`.
    pub fn ranks(&self, s: usize) -> &[u32] {
        let (lo, hi) = self.span(s);
        &self.flat[lo..hi]
    }

    /// k-th smallest rank (1-based) in segment `s`.
    pub fn kth(&self, s: usize, k: usize) -> u32 {
        self.ranks(s)[k - 1]
    }

    /// Merges segments `s` and `s + 1`, keeping the joint span sorted.
    pub fn merge(&mut self, s: usize) {
        let (alo, ahi) = self.span(s);
        let (blo, bhi) = self.span(s + 1);
        debug_assert_eq!(ahi, blo);
        let mut merged = Vec::with_capacity(bhi - alo);
        let (mut i, mut j) = (alo, blo);
        while i < ahi && j < bhi {
            if self.flat[i] <= self.flat[j] {
                merged.push(self.flat[i]);
                i += 1;
            } else {
                merged.push(self.flat[j]);
                j += 1;
            }
        }
        merged.extend_from_slice(&self.flat[i..ahi]);
        merged.extend_from_slice(&self.flat[j..bhi]);
        self.flat[alo..bhi].copy_from_slice(&merged);
        self.ends.remove(s);
    }
}

// ---------------------------------------------------------------------------
// The rank-scale surrogate loss
// ---------------------------------------------------------------------------

/// Smoothed rank loss: the derivative of the i-th loss climbs from
/// `z - beta` below zero through a unit ramp across `[Z_i - 1, Z_i]` and a
/// flat stretch at `1 - beta` up to n, with linear coercive tails beyond.
#[derive(Debug, Clone)]
pub struct RankLoss {
    z: Vec<u32>,
    beta: f64,
    select: RankSelect,
}

/// Snap tolerance for branch selection in the closed-form inverses; exact
/// arithmetic lands exactly on integer offsets, floating point may miss by
/// rounding.
const BRANCH_SNAP: f64 = 1e-7;

impl RankLoss {
    pub fn new(z: Vec<u32>, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let n = z.len();
        if n == 0 {
            return Err(Error::InvalidData("empty rank vector".into()));
        }
        let mut seen = vec![false; n + 1];
        for &v in &z {
            if v == 0 || v as usize > n || seen[v as usize] {
                return Err(Error::InvalidData(
                    "rank vector is not a permutation of 1..n".into(),
                ));
            }
            seen[v as usize] = true;
        }
        let select = RankSelect::new(&z);
        Ok(RankLoss { z, beta, select })
    }

    pub fn ranks(&self) -> &[u32] {
        &self.z
    }

    fn nn(&self) -> f64 {
        self.z.len() as f64
    }

    fn snap(u: f64) -> f64 {
        let r = u.round();
        if (u - r).abs() <= BRANCH_SNAP {
            r
        } else {
            u
        }
    }

    fn inverse(&self, j: usize, k: usize, t: f64, upper: bool) -> f64 {
        // in the shifted coordinate u = t + l*beta the derivative's middle
        // branches live on (i-1, i] (lower) resp. [i-1, i) (upper)
        let l = (k - j + 1) as f64;
        let u = Self::snap(t + l * self.beta);
        if upper {
            if u < 0.0 {
                return u / l;
            }
            if u >= l {
                return self.nn() + u / l - 1.0;
            }
        } else {
            if u <= 0.0 {
                return u / l;
            }
            if u > l {
                return self.nn() + u / l - 1.0;
            }
        }
        let i = if upper {
            (u.floor() as i64 + 1).clamp(1, l as i64) as usize
        } else {
            (u.ceil() as i64).clamp(1, l as i64) as usize
        };
        let zi = self.select.kth(j, k, i) as f64;
        zi + u - i as f64
    }
}

impl LossModel for RankLoss {
    fn len(&self) -> usize {
        self.z.len()
    }

    fn value(&self, i: usize, z: f64) -> f64 {
        // exact piecewise antiderivative of the 5-piece derivative, zero at 0
        let a = self.z[i] as f64;
        let b = self.beta;
        let n = self.nn();
        if z <= 0.0 {
            0.5 * z * z - b * z
        } else if z <= a - 1.0 {
            -b * z
        } else if z <= a {
            let d = z - a + 1.0;
            0.5 * d * d - b * z
        } else if z <= n {
            (1.0 - b) * z + 0.5 - a
        } else {
            let d = z - n + 1.0;
            0.5 * d * d - b * z + n - a
        }
    }

    fn left_deriv(&self, i: usize, z: f64) -> f64 {
        self.right_deriv(i, z)
    }

    fn right_deriv(&self, i: usize, z: f64) -> f64 {
        let a = self.z[i] as f64;
        let b = self.beta;
        let n = self.nn();
        if z <= 0.0 {
            z - b
        } else if z <= a - 1.0 {
            -b
        } else if z <= a {
            z - a + 1.0 - b
        } else if z <= n {
            1.0 - b
        } else {
            z - n + 1.0 - b
        }
    }

    fn lower_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        Ok(self.inverse(j, k, t, false))
    }

    fn upper_inverse(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        Ok(self.inverse(j, k, t, true))
    }

    fn bracket_hint(&self, _j: usize, _k: usize) -> (f64, f64) {
        (self.beta - 1.0, self.nn() + self.beta)
    }
}

// ---------------------------------------------------------------------------
// The quantile fit
// ---------------------------------------------------------------------------

/// A quantile fit: the data-scale minimizer with its diagnostics, plus the
/// internal rank-scale solution it was read off from.
#[derive(Debug, Clone)]
pub struct QuantileFit {
    pub fit: Fit,
    /// Rank-scale solution; lies strictly inside `(beta, n - 1 + beta)`
    /// coordinate-wise for n >= 2.
    pub rank_values: Vec<f64>,
}

/// Minimizes `sum_i rho_beta(f_i - Y_i) + sum_k lambda_k |f_{k+1} - f_k|`
/// exactly. Runs in O(n log n).
pub fn fit_quantile(y: &[f64], beta: f64, lambda: &LambdaVector) -> Result<QuantileFit> {
    check_beta(beta)?;
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidData("empty response vector".into()));
    }
    if lambda.n() != n {
        return Err(Error::InvalidParameter(format!(
            "penalty vector sized for {} observations, data has {n}",
            lambda.n()
        )));
    }
    let z = rank_vector(y);
    let rank_model = RankLoss::new(z, beta)?;
    let rank_fit = fit_taut(&rank_model, lambda)?;

    let mut order_stats = y.to_vec();
    order_stats.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let values: Vec<f64> = rank_fit
        .values
        .iter()
        .map(|&g| {
            let snapped = RankLoss::snap(g);
            let idx = (snapped.ceil() as i64).clamp(1, n as i64) as usize;
            order_stats[idx - 1]
        })
        .collect();

    let data_model = QuantileLoss::new(y.to_vec(), beta)?;
    let fit = Fit::from_values(&data_model, lambda, values);
    Ok(QuantileFit {
        fit,
        rank_values: rank_fit.values,
    })
}

/// Quantile fit with duplicate design points: the surrogate runs on tie
/// blocks (per-block pooled rank losses, penalties on block gaps) and the
/// block solution maps through the order statistics as usual.
///
/// Returns the block-scale fit plus the per-observation expansion.
pub fn fit_quantile_ties(
    data: &crate::data::DataSet,
    beta: f64,
    lambda: &LambdaVector,
) -> Result<(QuantileFit, Vec<f64>)> {
    use crate::loss::Blocked;
    check_beta(beta)?;
    if lambda.n() != data.blocks() {
        return Err(Error::InvalidParameter(format!(
            "penalty vector sized for {} blocks, data has {}",
            lambda.n(),
            data.blocks()
        )));
    }
    let y = data.y();
    let n = y.len();
    let rank_model = RankLoss::new(rank_vector(y), beta)?;
    let blocked_rank = Blocked::new(&rank_model, data.block_ends())?;
    let rank_fit = fit_taut(&blocked_rank, lambda)?;

    let mut order_stats = y.to_vec();
    order_stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let block_values: Vec<f64> = rank_fit
        .values
        .iter()
        .map(|&g| {
            let idx = (RankLoss::snap(g).ceil() as i64).clamp(1, n as i64) as usize;
            order_stats[idx - 1]
        })
        .collect();

    let data_model = QuantileLoss::new(y.to_vec(), beta)?;
    let blocked_data = Blocked::new(&data_model, data.block_ends())?;
    let fit = Fit::from_values(&blocked_data, lambda, block_values);
    let mut expanded = Vec::with_capacity(n);
    for b in 0..data.blocks() {
        let (lo, hi) = data.block_range(b);
        expanded.extend(std::iter::repeat(fit.values[b]).take(hi - lo));
    }
    Ok((
        QuantileFit {
            fit,
            rank_values: rank_fit.values,
        },
        expanded,
    ))
}

/// The quantile objective `sum_i rho_beta(f_i - Y_i) + sum lambda |df|`,
/// evaluated exactly by branch.
pub fn quantile_objective(y: &[f64], beta: f64, lambda: &LambdaVector, f: &[f64]) -> f64 {
    let mut t = 0.0;
    for (fi, yi) in f.iter().zip(y.iter()) {
        t += QuantileLoss::rho(beta, fi - yi);
    }
    for k in 1..f.len() {
        t += lambda.at(k) * (f[k] - f[k - 1]).abs();
    }
    t
}
