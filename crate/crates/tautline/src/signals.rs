//! Benchmark test signals, noise test beds, and a reproducible generator.

use crate::error::{Error, Result};

/// PCG-XSH-RR 32-bit generator with a SplitMix64-seeded state. Identical
/// seeds give identical streams on every platform; replicate substreams are
/// derived as `seed + replicate`.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    spare_normal: Option<f64>,
}

const PCG_MULT: u64 = 6364136223846793005;
const PCG_INC: u64 = 1442695040888963407;

impl Rng {
    pub fn new(seed: u64) -> Self {
        // SplitMix64 scramble so nearby seeds start far apart
        let mut z = seed.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        let mut rng = Rng {
            state: z,
            spare_normal: None,
        };
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULT).wrapping_add(PCG_INC);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        ((self.next_u32() as u64) << 32) | self.next_u32() as u64
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * 1.1102230246251565e-16
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in 0..n.
    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n.max(1)
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Standard Cauchy draw via the inverse CDF.
    pub fn cauchy(&mut self) -> f64 {
        (std::f64::consts::PI * (self.uniform() - 0.5)).tan()
    }

    pub fn bernoulli(&mut self, p: f64) -> f64 {
        if self.uniform() < p {
            1.0
        } else {
            0.0
        }
    }

    /// Poisson draw by multiplicative rejection, chunked so the rate of a
    /// single round stays moderate.
    pub fn poisson(&mut self, rate: f64) -> f64 {
        if rate <= 0.0 {
            return 0.0;
        }
        let mut remaining = rate;
        let mut total = 0u64;
        while remaining > 30.0 {
            total += self.poisson_small(30.0);
            remaining -= 30.0;
        }
        total += self.poisson_small(remaining);
        total as f64
    }

    fn poisson_small(&mut self, rate: f64) -> u64 {
        let limit = (-rate).exp();
        let mut k = 0u64;
        let mut prod = self.uniform();
        while prod > limit {
            k += 1;
            prod *= self.uniform();
        }
        k
    }
}

/// The four standard piecewise test signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Blocks,
    Bumps,
    Heavisine,
    Doppler,
}

impl SignalKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "blocks" => Ok(SignalKind::Blocks),
            "bumps" => Ok(SignalKind::Bumps),
            "heavisine" => Ok(SignalKind::Heavisine),
            "doppler" => Ok(SignalKind::Doppler),
            other => Err(Error::InvalidParameter(format!(
                "unknown signal '{other}' (expected blocks, bumps, heavisine or doppler)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Blocks => "blocks",
            SignalKind::Bumps => "bumps",
            SignalKind::Heavisine => "heavisine",
            SignalKind::Doppler => "doppler",
        }
    }

    /// Number of interior local extreme segments of the noise-free signal,
    /// or None when it is unbounded.
    pub fn true_extrema(self) -> Option<usize> {
        match self {
            SignalKind::Blocks => Some(9),
            SignalKind::Bumps => Some(21),
            SignalKind::Heavisine => Some(6),
            SignalKind::Doppler => None,
        }
    }
}

const POS: [f64; 11] = [
    0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

fn raw_signal(kind: SignalKind, t: f64) -> f64 {
    match kind {
        SignalKind::Blocks => {
            let mut s = 0.0;
            for j in 0..11 {
                s += BLOCK_HEIGHTS[j] * 0.5 * (1.0 + sign(t - POS[j]));
            }
            s
        }
        SignalKind::Bumps => {
            let mut s = 0.0;
            for j in 0..11 {
                let u = ((t - POS[j]) / BUMP_WIDTHS[j]).abs();
                s += BUMP_HEIGHTS[j] * (1.0 + u).powi(-4);
            }
            s
        }
        SignalKind::Heavisine => {
            4.0 * (4.0 * std::f64::consts::PI * t).sin() - sign(t - 0.3) - sign(0.72 - t)
        }
        SignalKind::Doppler => {
            (t * (1.0 - t)).max(0.0).sqrt()
                * (2.0 * std::f64::consts::PI * 1.05 / (t + 0.05)).sin()
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sample standard deviation the test signals are rescaled to: seven times
/// the 0.4 noise scale, the usual benchmark signal-to-noise convention.
pub const SIGNAL_SD: f64 = 2.8;

/// Samples a test signal at `t = i/n`, `i = 1..n`, affinely rescaled to
/// sample mean 0 and sample standard deviation [`SIGNAL_SD`] over the grid.
pub fn signal_values(kind: SignalKind, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidData("signal length must be >= 1".into()));
    }
    let mut f: Vec<f64> = (1..=n)
        .map(|i| raw_signal(kind, i as f64 / n as f64))
        .collect();
    let mean = f.iter().sum::<f64>() / n as f64;
    let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if sd > 0.0 {
        for v in f.iter_mut() {
            *v = (*v - mean) / sd * SIGNAL_SD;
        }
    } else {
        for v in f.iter_mut() {
            *v -= mean;
        }
    }
    Ok(f)
}

/// Noise test beds applied to a sampled signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestBed {
    /// `Y_i = f_i + 0.4 Z_i` with standard normal `Z_i`.
    Gaussian,
    /// Cauchy errors with location `f_i` and scale 0.4.
    Cauchy,
    /// `Y_i ~ Bernoulli(p_i)` with `p_i = (f_i - min f) / (max f - min f)`.
    Binary,
    /// `Y_i ~ Poisson(l_i)` with `l_i = f_i - min f`.
    Poisson,
}

impl TestBed {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(TestBed::Gaussian),
            "cauchy" => Ok(TestBed::Cauchy),
            "binary" => Ok(TestBed::Binary),
            "poisson" => Ok(TestBed::Poisson),
            other => Err(Error::InvalidParameter(format!(
                "unknown test bed '{other}' (expected gaussian, cauchy, binary or poisson)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestBed::Gaussian => "gaussian",
            TestBed::Cauchy => "cauchy",
            TestBed::Binary => "binary",
            TestBed::Poisson => "poisson",
        }
    }
}

/// Noise scale of the additive test beds.
pub const NOISE_SCALE: f64 = 0.4;

/// Draws responses from a test bed around the signal `f`.
pub fn gen_noise(bed: TestBed, f: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in f {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    f.iter()
        .map(|&v| match bed {
            TestBed::Gaussian => v + NOISE_SCALE * rng.normal(),
            TestBed::Cauchy => v + NOISE_SCALE * rng.cauchy(),
            TestBed::Binary => {
                let p = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                rng.bernoulli(p)
            }
            TestBed::Poisson => rng.poisson(v - lo),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::count_extrema;

    #[test]
    fn signals_are_deterministic() {
        for kind in [
            SignalKind::Blocks,
            SignalKind::Bumps,
            SignalKind::Heavisine,
            SignalKind::Doppler,
        ] {
            let a = signal_values(kind, 512).unwrap();
            let b = signal_values(kind, 512).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn signals_are_standardized() {
        for kind in [SignalKind::Blocks, SignalKind::Doppler] {
            let f = signal_values(kind, 2048).unwrap();
            let n = f.len() as f64;
            let mean = f.iter().sum::<f64>() / n;
            let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10);
            assert!((var - SIGNAL_SD * SIGNAL_SD).abs() < 1e-9);
        }
    }

    #[test]
    fn true_interior_extrema_counts() {
        let blocks = signal_values(SignalKind::Blocks, 2048).unwrap();
        assert_eq!(count_extrema(&blocks, 1e-9).interior(), 9);
        let bumps = signal_values(SignalKind::Bumps, 2048).unwrap();
        assert_eq!(count_extrema(&bumps, 1e-9).interior(), 21);
        let heavisine = signal_values(SignalKind::Heavisine, 2048).unwrap();
        assert_eq!(count_extrema(&heavisine, 1e-9).interior(), 6);
    }

    #[test]
    fn rng_streams_reproducible_and_distinct() {
        let a: Vec<u32> = {
            let mut r = Rng::new(33);
            (0..100).map(|_| r.next_u32()).collect()
        };
        let b: Vec<u32> = {
            let mut r = Rng::new(33);
            (0..100).map(|_| r.next_u32()).collect()
        };
        assert_eq!(a, b);
        let mut r1 = Rng::new(1);
        let mut r2 = Rng::new(2);
        let same = (0..10_000).filter(|_| r1.next_u32() == r2.next_u32()).count();
        assert!(same < 5);
    }

    #[test]
    fn rng_uniform_chi_square() {
        let mut r = Rng::new(2024);
        let mut bins = [0usize; 16];
        let n = 100_000;
        for _ in 0..n {
            bins[(r.uniform() * 16.0) as usize % 16] += 1;
        }
        let expect = n as f64 / 16.0;
        let stat: f64 = bins
            .iter()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        // chi-square(15) stays far below 60 except with p < 1e-6
        assert!(stat < 60.0, "chi-square statistic {stat}");
    }

    #[test]
    fn gaussian_bed_marginals() {
        let f = vec![0.0; 100_000];
        let y = gen_noise(TestBed::Gaussian, &f, 5);
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| v * v).sum::<f64>() / n - mean * mean).sqrt();
        assert!(mean.abs() < 3.0 * NOISE_SCALE / n.sqrt() + 1e-3);
        assert!((sd - NOISE_SCALE).abs() < 0.01);
    }

    #[test]
    fn cauchy_bed_upper_quantile() {
        let f = vec![0.0; 200_000];
        let y = gen_noise(TestBed::Cauchy, &f, 11);
        let mut v = y;
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q90 = v[(0.9 * v.len() as f64) as usize];
        // 0.4 tan(0.4 pi) = 1.2311
        assert!((q90 - 1.2311).abs() < 0.03, "q90 = {q90}");
    }

    #[test]
    fn binary_bed_extremes_are_sure() {
        let f = signal_values(SignalKind::Blocks, 256).unwrap();
        let y = gen_noise(TestBed::Binary, &f, 3);
        let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (i, &v) in f.iter().enumerate() {
            if v == hi {
                assert_eq!(y[i], 1.0);
            }
            assert!(y[i] == 0.0 || y[i] == 1.0);
        }
    }

    #[test]
    fn poisson_bed_mean_matches_rate() {
        let f = vec![3.0; 100_000];
        // min f = 3 so the rate is 0 -> deterministic zeros
        let y0 = gen_noise(TestBed::Poisson, &f, 9);
        assert!(y0.iter().all(|&v| v == 0.0));

        let mut f = vec![1.0; 100_000];
        f.push(0.0); // pin min at 0 so rates equal 1 elsewhere
        let y = gen_noise(TestBed::Poisson, &f, 9);
        let mean = y.iter().take(100_000).sum::<f64>() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.02, "mean = {mean}");
    }
}
