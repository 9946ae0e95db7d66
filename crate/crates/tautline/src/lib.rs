//! Nonparametric regression by total-variation penalized convex loss
//! minimization.
//!
//! The estimator minimizes
//!
//! ```text
//! T(f) = sum_i R_i(f_i) + sum_k lambda_k |f_{k+1} - f_k|
//! ```
//!
//! over vectors `f`, where each `R_i` is a convex per-observation loss and
//! the `lambda_k > 0` are per-gap penalties. A single non-iterative sweep
//! ([`fit_taut`]) solves the problem exactly for differentiable losses with
//! coercive derivatives; specialized front ends cover conditional means,
//! quantiles ([`fit_quantile`]), and Poisson/binary regression
//! ([`fit_expfam`]). Penalties can be fixed by square-root rules or chosen
//! adaptively by multiscale local squeezing ([`local_squeeze`]). Every fit
//! can be certified against exact optimality conditions independent of the
//! solver ([`verify`]).

pub mod csvio;
pub mod data;
pub mod dist;
pub mod error;
pub mod expfam;
pub mod loss;
pub mod multiscale;
pub mod quantile;
pub mod signals;
pub mod simulate;
pub mod taut;
pub mod verify;

pub use data::{DataSet, LambdaVector};
pub use error::{Error, Result};
pub use expfam::{fit_expfam, mean_scale, ExpFamilyFit};
pub use loss::{
    Blocked, ExpFamily, Family, LossModel, PseudoHuber, Quadratic, QuantileLoss, Smoothed,
};
pub use multiscale::{
    check_multiresolution, default_lambda_mean, default_lambda_quantile, eta_bounds,
    local_squeeze, sigma_hat, worst_multiscale_ratio, BoundsSpec, IntervalFamily, SigmaMethod,
    SqueezeKind, SqueezeOptions, SqueezeResult, SqueezeTrace,
};
pub use quantile::{fit_quantile, quantile_objective, rank_vector, QuantileFit, RankLoss};
pub use signals::{gen_noise, signal_values, Rng, SignalKind, TestBed};
pub use taut::{fit_taut, fit_taut_ties, objective, range_bounds, Fit, RangeBounds, Segment};
pub use verify::{
    brute_force_min, check_isotonic_optimality, check_monotone_runs, check_optimality,
    check_optimality_smooth, count_extrema, isotonic_oracle, random_tube_search, tube_feasible,
    BruteMode, CertKind, Certificate,
};
