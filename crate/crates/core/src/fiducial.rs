//! Fiducial inference for a scalar parameter through a pivot.
//!
//! A [`Pivot`] is a quantity Γ with a known pre-data distribution together with a
//! monotone map that recovers the parameter from (Γ, data). When the analyst declares
//! that little or nothing was known about the parameter beforehand, Γ is taken to keep
//! its pre-data distribution after the data are seen, and the post-data density of the
//! parameter is the push-forward of that distribution through the map.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{Density1D, DEFAULT_GRID_POINTS};
use crate::error::{IoiError, Result};

/// Sufficient summary of a normal sample with known variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SummaryRepr", into = "SummaryRepr")]
pub struct DataSummary {
    mean: f64,
    n: u64,
    sigma2: f64,
}

#[derive(Serialize, Deserialize)]
struct SummaryRepr {
    mean: f64,
    n: u64,
    sigma2: f64,
}

impl TryFrom<SummaryRepr> for DataSummary {
    type Error = IoiError;

    fn try_from(r: SummaryRepr) -> Result<Self> {
        DataSummary::new(r.mean, r.n, r.sigma2)
    }
}

impl From<DataSummary> for SummaryRepr {
    fn from(d: DataSummary) -> Self {
        SummaryRepr {
            mean: d.mean,
            n: d.n,
            sigma2: d.sigma2,
        }
    }
}

impl DataSummary {
    pub fn new(mean: f64, n: u64, sigma2: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(IoiError::Validation(format!("sample mean must be finite, got {mean}")));
        }
        if n < 1 {
            return Err(IoiError::Validation("sample size must be at least 1".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(IoiError::Validation(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(DataSummary { mean, n, sigma2 })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Standard error σ/√n of the sample mean.
    pub fn standard_error(&self) -> f64 {
        (self.sigma2 / self.n as f64).sqrt()
    }

    /// Pools two summaries of samples drawn with the same known variance.
    pub fn combine(&self, other: &DataSummary) -> Result<DataSummary> {
        if self.sigma2 != other.sigma2 {
            return Err(IoiError::Validation("cannot pool samples with different sigma2".into()));
        }
        let n = self.n + other.n;
        let mean = (self.mean * self.n as f64 + other.mean * other.n as f64) / n as f64;
        DataSummary::new(mean, n, self.sigma2)
    }
}

/// Declared state of pre-data knowledge about the parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKnowledge {
    NoneOrVeryLittle,
    Substantive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PivotKind {
    NormalMean,
    General,
}

type InvertFn = dyn Fn(f64, &DataSummary) -> f64 + Send + Sync;

/// Primary random variable Γ and the map `(γ, data) -> parameter`.
#[derive(Clone)]
pub struct Pivot {
    pre_data: Density1D,
    invert: Arc<InvertFn>,
    direction: Direction,
    kind: PivotKind,
}

impl fmt::Debug for Pivot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pivot")
            .field("pre_data", &self.pre_data)
            .field("direction", &self.direction)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Number of γ values scanned by the monotonicity check.
const MONOTONE_SCAN_POINTS: usize = 100;
/// Central probability covered by the monotonicity scan.
const MONOTONE_SCAN_COVERAGE: f64 = 0.9999;
/// Tail probability cut from each side when tabulating a general push-forward.
const PUSH_FORWARD_TAIL: f64 = 1e-10;

impl Pivot {
    pub fn new(
        pre_data: Density1D,
        direction: Direction,
        invert: impl Fn(f64, &DataSummary) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Pivot {
            pre_data,
            invert: Arc::new(invert),
            direction,
            kind: PivotKind::General,
        }
    }

    /// Γ = (x̄ − μ)/(σ/√n), standard normal before the data; inverts to μ = x̄ − γ σ/√n.
    pub fn normal_mean() -> Self {
        Pivot {
            pre_data: Density1D::normal(0.0, 1.0).expect("unit normal"),
            invert: Arc::new(|gamma, data: &DataSummary| data.mean() - gamma * data.standard_error()),
            direction: Direction::Decreasing,
            kind: PivotKind::NormalMean,
        }
    }

    pub fn pre_data_distribution(&self) -> &Density1D {
        &self.pre_data
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn invert(&self, gamma: f64, data: &DataSummary) -> f64 {
        (self.invert)(gamma, data)
    }

    /// Checks strict monotonicity in the declared direction on a scan of the central γ range.
    pub fn check_monotone(&self, data: &DataSummary) -> Result<()> {
        let tail = 0.5 * (1.0 - MONOTONE_SCAN_COVERAGE);
        let lo = self.pre_data.quantile(tail)?;
        let hi = self.pre_data.quantile(1.0 - tail)?;
        let step = (hi - lo) / (MONOTONE_SCAN_POINTS - 1) as f64;
        let mut prev = self.invert(lo, data);
        for i in 1..MONOTONE_SCAN_POINTS {
            let gamma = lo + i as f64 * step;
            let theta = self.invert(gamma, data);
            let ok = match self.direction {
                Direction::Increasing => theta > prev,
                Direction::Decreasing => theta < prev,
            };
            if !ok || !theta.is_finite() {
                return Err(IoiError::Structural(format!(
                    "pivot inverse is not strictly {:?} near γ = {gamma}",
                    self.direction
                )));
            }
            prev = theta;
        }
        Ok(())
    }

    /// γ such that `invert(γ) = theta`, by bisection on `[lo, hi]`.
    fn solve_gamma(&self, theta: f64, data: &DataSummary, mut lo: f64, mut hi: f64) -> f64 {
        let increasing = self.direction == Direction::Increasing;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = self.invert(mid, data) < theta;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Numerical push-forward of the pre-data distribution onto a uniform parameter grid.
    fn push_forward_grid(&self, data: &DataSummary) -> Result<Density1D> {
        let g_lo = self.pre_data.quantile(PUSH_FORWARD_TAIL)?;
        let g_hi = self.pre_data.quantile(1.0 - PUSH_FORWARD_TAIL)?;
        let (a, b) = (self.invert(g_lo, data), self.invert(g_hi, data));
        let (t_lo, t_hi) = (a.min(b), a.max(b));
        let sign = match self.direction {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        };
        // The CDF of the parameter is F_Γ(γ(θ)) (or its complement); differentiate it
        // across each node so no derivative of the inverse map is needed.
        let cdf = |theta: f64| {
            let gamma = self.solve_gamma(theta, data, g_lo, g_hi);
            let f = self.pre_data.cdf(gamma);
            if sign > 0.0 {
                f
            } else {
                1.0 - f
            }
        };
        let n = DEFAULT_GRID_POINTS;
        let h = (t_hi - t_lo) / (n - 1) as f64;
        let half = 0.5 * h;
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let t = t_lo + i as f64 * h;
                let (l, r) = ((t - half).max(t_lo), (t + half).min(t_hi));
                ((cdf(r) - cdf(l)) / (r - l)).max(0.0)
            })
            .collect();
        Ok(Density1D::grid(t_lo, t_hi, weights)?.normalize())
    }
}

/// The normal-mean pivot Γ = (x̄ − μ)/(σ/√n).
pub fn normal_mean_pivot() -> Pivot {
    Pivot::normal_mean()
}

/// Post-data density of the parameter under the fiducial argument.
///
/// Blocked with [`IoiError::AnalogyRejected`] when substantive pre-data knowledge was declared.
pub fn fiducial_density(pivot: &Pivot, data: &DataSummary, flag: PriorKnowledge) -> Result<Density1D> {
    if flag == PriorKnowledge::Substantive {
        return Err(IoiError::AnalogyRejected(
            "substantive pre-data knowledge declared; the fiducial argument does not apply".into(),
        ));
    }
    pivot.check_monotone(data)?;
    match pivot.kind {
        PivotKind::NormalMean => Density1D::normal(data.mean(), data.sigma2() / data.n() as f64),
        PivotKind::General => pivot.push_forward_grid(data),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Parameter ≤ threshold.
    Leq,
    /// Parameter > threshold.
    Gt,
}

/// Mass of `d` on one side of `threshold`.
pub fn fiducial_region_probability(d: &Density1D, threshold: f64, side: Side) -> f64 {
    let below = d.cdf(threshold);
    match side {
        Side::Leq => below,
        Side::Gt => 1.0 - below,
    }
}
