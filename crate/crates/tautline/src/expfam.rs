//! Penalized maximum likelihood for Poisson and binary regression.
//!
//! The negative log-likelihood losses share their derivative structure with
//! least squares: `b'(z) - Y_i` against `z - Y_i`. Running the quadratic
//! sweep on the raw responses and mapping the fitted means through the
//! inverse mean function therefore gives the exact penalized maximum
//! likelihood estimate, with no iteration. The mapped fit is certified
//! against the likelihood model directly.

use crate::data::LambdaVector;
use crate::error::{Error, Result};
use crate::loss::{ExpFamily, Family, Quadratic};
use crate::taut::{fit_taut, Fit};

/// A likelihood fit on the natural-parameter scale together with the
/// mean-scale values it came from.
#[derive(Debug, Clone)]
pub struct ExpFamilyFit {
    /// Natural-parameter fit (log mean for Poisson, logit mean for binary),
    /// with diagnostics computed under the likelihood model.
    pub fit: Fit,
    /// Mean-scale values; identical to the least-squares fit on the raw
    /// responses.
    pub mean_values: Vec<f64>,
    pub family: Family,
}

/// Fits total-variation penalized maximum likelihood for a one-parameter
/// exponential family. Requires non-constant responses: with all responses
/// equal the likelihood has no maximizer over the natural parameters.
pub fn fit_expfam(y: &[f64], lambda: &LambdaVector, family: Family) -> Result<ExpFamilyFit> {
    let model = ExpFamily::new(y.to_vec(), family)?;
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        let msg = match family {
            Family::Poisson => {
                if hi == 0.0 {
                    "all Poisson counts are zero; the penalized likelihood has no maximizer"
                        .to_string()
                } else {
                    format!(
                        "all Poisson counts equal {hi}; the penalized likelihood has no maximizer"
                    )
                }
            }
            Family::Bernoulli => format!(
                "constant binary labels (all {hi}); the penalized likelihood has no maximizer"
            ),
        };
        return Err(Error::NonCoerciveData(msg));
    }
    let ls = fit_taut(&Quadratic::new(y.to_vec())?, lambda)?;
    let natural: Result<Vec<f64>> = ls.values.iter().map(|&v| family.natural(v)).collect();
    let fit = Fit::from_values(&model, lambda, natural?);
    Ok(ExpFamilyFit {
        fit,
        mean_values: ls.values,
        family,
    })
}

/// Mean-scale view of a likelihood fit; exactly the least-squares values.
pub fn mean_scale(fit: &ExpFamilyFit) -> &[f64] {
    &fit.mean_values
}
