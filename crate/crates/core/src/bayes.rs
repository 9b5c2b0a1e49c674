//! Bayesian updating: closed-form normal–normal and generic grid updates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::Density1D;
use crate::error::{IoiError, Result};
use crate::fiducial::DataSummary;

/// Below this log-weight `exp` underflows to zero in double precision.
pub const UNDERFLOW_LOG_WEIGHT: f64 = -745.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

impl NormalPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return Err(IoiError::Validation(format!(
                "normal prior needs a finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(NormalPrior { mean, variance })
    }
}

type LogLikFn = dyn Fn(f64, &DataSummary) -> f64 + Send + Sync;

/// Log-likelihood of a parameter value given summarized data.
#[derive(Clone)]
pub struct LikelihoodKernel {
    log_likelihood: Arc<LogLikFn>,
}

impl fmt::Debug for LikelihoodKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LikelihoodKernel")
    }
}

impl LikelihoodKernel {
    pub fn new(log_likelihood: impl Fn(f64, &DataSummary) -> f64 + Send + Sync + 'static) -> Self {
        LikelihoodKernel {
            log_likelihood: Arc::new(log_likelihood),
        }
    }

    /// Normal sample with known variance: `-n (x̄ − μ)² / (2σ²)` up to a constant.
    pub fn normal_mean() -> Self {
        LikelihoodKernel::new(|mu, data: &DataSummary| {
            let d = data.mean() - mu;
            -(data.n() as f64) * d * d / (2.0 * data.sigma2())
        })
    }

    pub fn eval(&self, theta: f64, data: &DataSummary) -> f64 {
        (self.log_likelihood)(theta, data)
    }
}

/// Normal prior times normal likelihood with known variance.
pub fn conjugate_normal_update(prior: &NormalPrior, data: &DataSummary) -> Result<Density1D> {
    let data_precision = data.n() as f64 / data.sigma2();
    let prior_precision = 1.0 / prior.variance;
    let precision = prior_precision + data_precision;
    let mean = (prior_precision * prior.mean + data_precision * data.mean()) / precision;
    Density1D::normal(mean, 1.0 / precision)
}

/// Uniform grid prior on `[lo, hi]`.
pub fn flat_grid_prior(lo: f64, hi: f64, n_points: usize) -> Result<Density1D> {
    Density1D::grid(lo, hi, vec![1.0; n_points]).map(|d| d.normalize())
}

/// Pointwise `prior × likelihood` on the prior's grid, renormalized.
pub fn grid_bayes_update(prior: &Density1D, lik: &LikelihoodKernel, data: &DataSummary) -> Result<Density1D> {
    let grid = prior
        .as_grid()
        .ok_or_else(|| IoiError::Structural(format!("grid update needs a grid prior, got {}", prior.form())))?;
    let mass = grid.mass();
    let log_weights: Vec<f64> = grid
        .weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if w <= 0.0 {
                f64::NEG_INFINITY
            } else {
                (w / mass).ln() + lik.eval(grid.node(i), data)
            }
        })
        .collect();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() {
        return Err(IoiError::Structural("likelihood produced NaN on the prior grid".into()));
    }
    if max < UNDERFLOW_LOG_WEIGHT {
        return Err(IoiError::DegenerateUpdate {
            max_log_weight: max,
            threshold: UNDERFLOW_LOG_WEIGHT,
        });
    }
    let weights = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    Ok(Density1D::grid(grid.lo(), grid.hi(), weights)?.normalize())
}
