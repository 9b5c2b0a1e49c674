//! Grid test for compatibility of two full conditionals.
//!
//! Two conditionals `p(θ₁|θ₂)` and `p(θ₂|θ₁)` come from a common joint iff their
//! ratio factorizes as `f(θ₁)·g(θ₂)`, i.e. iff `log r` is additive. On a grid this
//! is a rank-one test: remove row and column means from `log r` and look at what
//! is left.

use serde::{Deserialize, Serialize};

use super::ConditionalSet;
use crate::error::{IoiError, Result};

/// Residual bound for kernels that are all closed-form normals.
pub const ANALYTIC_THRESHOLD: f64 = 1e-6;
/// Residual bound when any kernel is a tabulated density.
pub const NUMERIC_THRESHOLD: f64 = 1e-3;
/// Up to this residual the pair counts as approximately compatible.
pub const APPROXIMATE_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkingBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl WorkingBox {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        for d in 0..2 {
            if !(lo[d].is_finite() && hi[d].is_finite() && lo[d] < hi[d]) {
                return Err(IoiError::Validation(format!(
                    "working box axis {} must satisfy lo < hi, got [{}, {}]",
                    d + 1,
                    lo[d],
                    hi[d]
                )));
            }
        }
        Ok(WorkingBox { lo, hi })
    }

    pub fn nodes(&self, axis: usize, n: usize) -> Vec<f64> {
        let h = (self.hi[axis] - self.lo[axis]) / (n - 1) as f64;
        (0..n)
            .map(|i| if i + 1 == n { self.hi[axis] } else { self.lo[axis] + i as f64 * h })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    ApproximatelyCompatible,
    Incompatible,
}

/// Joint density on an `n × n` grid; `weights[i * n + j]` sits at `(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointGrid {
    pub bounds: WorkingBox,
    pub n: usize,
    pub weights: Vec<f64>,
}

impl JointGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Trapezoid marginal of θ₁ (axis 0) or θ₂ (axis 1) at the grid nodes.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        let n = self.n;
        let h_other = (self.bounds.hi[1 - axis] - self.bounds.lo[1 - axis]) / (n - 1) as f64;
        (0..n)
            .map(|a| {
                let line: Vec<f64> = (0..n)
                    .map(|b| if axis == 0 { self.at(a, b) } else { self.at(b, a) })
                    .collect();
                trapezoid(&line, h_other)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub verdict: Verdict,
    /// Sup-norm of the non-additive part of `log r` on the grid.
    pub residual: f64,
    pub threshold: f64,
    /// All kernels returned closed-form densities.
    pub analytic: bool,
    /// Induced joint, present for a compatible verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointGrid>,
    /// Largest gap between the joint's grid conditionals and the inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_sup_distance: Option<f64>,
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Rank-one test of `log p(θ₁|θ₂) − log p(θ₂|θ₁)` on a `grid_n × grid_n` discretization of `bounds`.
pub fn check_compatibility(set: &ConditionalSet, bounds: WorkingBox, grid_n: usize) -> Result<CompatibilityReport> {
    if set.k() != 2 {
        return Err(IoiError::Validation(format!(
            "pairwise compatibility is decided only for 2 parameters, got {}",
            set.k()
        )));
    }
    if grid_n < 3 {
        return Err(IoiError::Validation(format!("compatibility grid needs at least 3 points, got {grid_n}")));
    }
    let n = grid_n;
    let xs = bounds.nodes(0, n);
    let ys = bounds.nodes(1, n);
    let mut analytic = true;

    // l1[i*n+j] = log p(x_i | y_j), l2[i*n+j] = log p(y_j | x_i)
    let mut l1 = vec![0.0; n * n];
    let mut l2 = vec![0.0; n * n];
    for (j, &y) in ys.iter().enumerate() {
        let d = set.conditional(0, &[y])?;
        analytic &= d.as_normal().is_some();
        for (i, &x) in xs.iter().enumerate() {
            l1[i * n + j] = d.ln_pdf(x);
        }
        if (0..n).all(|i| l1[i * n + j] == f64::NEG_INFINITY) {
            return Err(IoiError::UndefinedRatio { kernel: 1, line: j });
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        let d = set.conditional(1, &[x])?;
        analytic &= d.as_normal().is_some();
        for (j, &y) in ys.iter().enumerate() {
            l2[i * n + j] = d.ln_pdf(y);
        }
        if (0..n).all(|j| l2[i * n + j] == f64::NEG_INFINITY) {
            return Err(IoiError::UndefinedRatio { kernel: 2, line: i });
        }
    }
    let threshold = if analytic { ANALYTIC_THRESHOLD } else { NUMERIC_THRESHOLD };

    let log_r: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a - b).collect();
    if log_r.iter().any(|v| !v.is_finite()) {
        return Ok(CompatibilityReport {
            verdict: Verdict::Incompatible,
            residual: f64::INFINITY,
            threshold,
            analytic,
            joint: None,
            conditional_sup_distance: None,
        });
    }

    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| log_r[i * n..(i + 1) * n].iter().sum::<f64>() / nf).collect();
    let col_mean: Vec<f64> = (0..n).map(|j| (0..n).map(|i| log_r[i * n + j]).sum::<f64>() / nf).collect();
    let grand = row_mean.iter().sum::<f64>() / nf;
    let residual = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (log_r[idx] - row_mean[i] - col_mean[j] + grand).abs()
        })
        .fold(0.0, f64::max);

    let verdict = if residual <= threshold {
        Verdict::Compatible
    } else if residual <= APPROXIMATE_THRESHOLD {
        Verdict::ApproximatelyCompatible
    } else {
        Verdict::Incompatible
    };
    if verdict != Verdict::Compatible {
        return Ok(CompatibilityReport {
            verdict,
            residual,
            threshold,
            analytic,
            joint: None,
            conditional_sup_distance: None,
        });
    }

    // r = f(θ₁)/g(θ₂): joint = p(θ₁|θ₂)·g(θ₂) = p(θ₂|θ₁)·f(θ₁); average both in log space.
    let log_joint: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            0.5 * ((l1[idx] - col_mean[j]) + (l2[idx] + row_mean[i]))
        })
        .collect();
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_joint.iter().map(|v| (v - max).exp()).collect();
    let hx = (bounds.hi[0] - bounds.lo[0]) / (n - 1) as f64;
    let hy = (bounds.hi[1] - bounds.lo[1]) / (n - 1) as f64;
    let rows: Vec<f64> = (0..n).map(|i| trapezoid(&weights[i * n..(i + 1) * n], hy)).collect();
    let mass = trapezoid(&rows, hx);
    weights.iter_mut().for_each(|w| *w /= mass);
    let joint = JointGrid { bounds, n, weights };

    let mut sup: f64 = 0.0;
    for j in 0..n {
        let joint_col: Vec<f64> = (0..n).map(|i| joint.at(i, j)).collect();
        let input_col: Vec<f64> = (0..n).map(|i| l1[i * n + j].exp()).collect();
        sup = sup.max(line_gap(&joint_col, &input_col, hx));
    }
    for i in 0..n {
        let joint_row = &joint.weights[i * n..(i + 1) * n];
        let input_row: Vec<f64> = (0..n).map(|j| l2[i * n + j].exp()).collect();
        sup = sup.max(line_gap(joint_row, &input_row, hy));
    }

    Ok(CompatibilityReport {
        verdict,
        residual,
        threshold,
        analytic,
        joint: Some(joint),
        conditional_sup_distance: Some(sup),
    })
}

/// Sup-distance between two lines after each is normalized to unit trapezoid mass.
fn line_gap(a: &[f64], b: &[f64], h: f64) -> f64 {
    let (ma, mb) = (trapezoid(a, h), trapezoid(b, h));
    a.iter().zip(b).map(|(x, y)| (x / ma - y / mb).abs()).fold(0.0, f64::max)
}
