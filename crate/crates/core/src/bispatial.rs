//! Region probabilities from a one-sided P value and declared pre-data belief.
//!
//! For a normal mean with known variance the P value for `μ ≤ ε` is
//! `P₀ = 1 − Φ((x̄ − ε)/(σ/√n))`. When `P₀` is small the post-data probability of
//! `μ ≤ ε` is assessed from `P₀` and the pre-data belief that `μ` lies in
//! `[−ε, ε]` through a calibration map. The map is replaceable; the default
//! multiplies prior odds by the P-value odds.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IoiError, Result};
use crate::fiducial::DataSummary;
use crate::normal::phi;

/// P values at or above this value never qualify.
pub const APPLICABILITY_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValueResult {
    pub p0: f64,
    pub applicable: bool,
}

type CalibrationFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Map `(P₀, pre_data_mass) -> P(μ ≤ ε | x)`.
#[derive(Clone)]
pub enum Calibration {
    /// Posterior odds of `μ ≤ ε` = prior odds × `P₀/(1 − P₀)`, capped at 1.
    OddsDefault,
    Custom { name: String, map: Arc<CalibrationFn> },
}

impl fmt::Debug for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Calibration {
    pub fn custom(name: impl Into<String>, map: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Calibration::Custom {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Calibration::OddsDefault => "odds-default",
            Calibration::Custom { name, .. } => name,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "odds-default" => Ok(Calibration::OddsDefault),
            other => Err(IoiError::Validation(format!("unknown calibration '{other}'"))),
        }
    }

    pub fn apply(&self, p0: f64, pre_data_mass: f64) -> f64 {
        match self {
            Calibration::OddsDefault => odds_default(p0, pre_data_mass),
            Calibration::Custom { map, .. } => map(p0, pre_data_mass),
        }
    }
}

fn odds_default(p0: f64, pre_data_mass: f64) -> f64 {
    let prior_odds = pre_data_mass / (1.0 - pre_data_mass);
    let odds = (prior_odds * p0 / (1.0 - p0)).min(1.0);
    odds / (1.0 + odds)
}

#[derive(Clone, Debug)]
pub struct BispatialConfig {
    epsilon: f64,
    pre_data_mass: f64,
    calibration: Calibration,
    max_p_value: f64,
}

impl BispatialConfig {
    pub fn new(epsilon: f64, pre_data_mass: f64, calibration: Calibration) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(IoiError::Domain(format!("epsilon must be finite and nonnegative, got {epsilon}")));
        }
        check_mass(pre_data_mass)?;
        Ok(BispatialConfig {
            epsilon,
            pre_data_mass,
            calibration,
            max_p_value: APPLICABILITY_THRESHOLD,
        })
    }

    /// Tightens the applicability threshold; it can only be lowered from 0.1.
    pub fn with_max_p_value(mut self, max_p_value: f64) -> Result<Self> {
        if !(max_p_value > 0.0 && max_p_value <= APPLICABILITY_THRESHOLD) {
            return Err(IoiError::Domain(format!(
                "P-value threshold must lie in (0, {APPLICABILITY_THRESHOLD}], got {max_p_value}"
            )));
        }
        self.max_p_value = max_p_value;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn pre_data_mass(&self) -> f64 {
        self.pre_data_mass
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn max_p_value(&self) -> f64 {
        self.max_p_value
    }
}

fn check_mass(pre_data_mass: f64) -> Result<()> {
    if !(pre_data_mass > 0.0 && pre_data_mass < 1.0) {
        return Err(IoiError::Domain(format!(
            "pre-data mass must lie strictly between 0 and 1, got {pre_data_mass}"
        )));
    }
    Ok(())
}

/// `P₀ = 1 − Φ((x̄ − ε)/(σ/√n))`, evaluated as `Φ(−z)` to keep tail precision.
pub fn one_sided_p_value(data: &DataSummary, epsilon: f64) -> Result<PValueResult> {
    if !epsilon.is_finite() {
        return Err(IoiError::Domain(format!("epsilon must be finite, got {epsilon}")));
    }
    let z = (data.mean() - epsilon) / data.standard_error();
    let p0 = phi(-z);
    Ok(PValueResult {
        p0,
        applicable: p0 < APPLICABILITY_THRESHOLD,
    })
}

/// Post-data probability that `μ ≤ ε`.
pub fn assess_region_probability(pv: &PValueResult, cfg: &BispatialConfig) -> Result<f64> {
    check_mass(cfg.pre_data_mass)?;
    if !pv.applicable || pv.p0 >= cfg.max_p_value {
        return Err(IoiError::AnalogyRejected(format!(
            "P value {} is not below {}; the bispatial analogy does not hold",
            pv.p0, cfg.max_p_value
        )));
    }
    let prob = cfg.calibration.apply(pv.p0, cfg.pre_data_mass);
    if !(0.0..=1.0).contains(&prob) {
        return Err(IoiError::Structural(format!(
            "calibration '{}' returned {prob}, not a probability",
            cfg.calibration.name()
        )));
    }
    Ok(prob)
}
