//! Divide-and-conquer composition of post-data densities.
//!
//! The parameter line is split into disjoint half-open regions `(lo, hi]`. Each
//! region gets a conditional density (the post-data density restricted to it) and
//! a post-data probability, possibly from different methods. The overall density
//! is the mixture
//!
//! ```text
//! p(θ | x) = Σᵢ p(θ | θ ∈ Rᵢ, x) · P(θ ∈ Rᵢ | x)
//! ```

use serde::{Deserialize, Serialize};

use crate::bispatial::{assess_region_probability, one_sided_p_value, BispatialConfig};
use crate::density::{Density1D, DEFAULT_GRID_POINTS};
use crate::error::{IoiError, Result};
use crate::fiducial::{fiducial_density, normal_mean_pivot, DataSummary, PriorKnowledge};

/// Regions holding less mass than this cannot be conditioned on.
pub const EMPTY_REGION_MASS: f64 = 1e-12;
/// A regional density may leak at most this much mass outside its region.
pub const REGION_LEAKAGE: f64 = 1e-6;
/// Tolerance on the sum of region probabilities.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Half-open interval `(lo, hi]`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(IoiError::Structural(format!("interval ({lo}, {hi}] is empty")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn at_most(hi: f64) -> Self {
        Interval { lo: f64::NEG_INFINITY, hi }
    }

    pub fn above(lo: f64) -> Self {
        Interval { lo, hi: f64::INFINITY }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionPartition {
    regions: Vec<Interval>,
    probabilities: Vec<f64>,
}

impl RegionPartition {
    pub fn new(regions: Vec<Interval>, probabilities: Vec<f64>) -> Result<Self> {
        if regions.is_empty() {
            return Err(IoiError::Structural("a partition needs at least one region".into()));
        }
        if regions.len() != probabilities.len() {
            return Err(IoiError::Structural(format!(
                "{} regions but {} probabilities",
                regions.len(),
                probabilities.len()
            )));
        }
        for r in &regions {
            Interval::new(r.lo, r.hi)?;
        }
        for pair in regions.windows(2) {
            if pair[0].hi > pair[1].lo {
                return Err(IoiError::Structural(format!(
                    "regions ({}, {}] and ({}, {}] overlap or are out of order",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(IoiError::Structural(format!("region probability {p} is not a probability")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(IoiError::Structural(format!("region probabilities sum to {sum}, not 1")));
        }
        Ok(RegionPartition { regions, probabilities })
    }

    pub fn regions(&self) -> &[Interval] {
        &self.regions
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// One conditional density per region, in partition order.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionalDensitySet {
    pub densities: Vec<Density1D>,
}

/// `d` conditioned on `region` and renormalized.
pub fn truncate_to_region(d: &Density1D, region: Interval) -> Result<Density1D> {
    let mass = d.mass_between(region.lo, region.hi);
    let empty = || IoiError::EmptyRegion {
        lo: region.lo,
        hi: region.hi,
        mass,
        threshold: EMPTY_REGION_MASS,
    };
    if mass.is_nan() || mass < EMPTY_REGION_MASS {
        return Err(empty());
    }
    let (a, b) = d.support();
    if region.lo <= a && region.hi >= b {
        return Ok(d.clone());
    }
    let (lo, hi) = (region.lo.max(a), region.hi.min(b));
    if lo >= hi {
        return Err(empty());
    }
    Ok(Density1D::grid_from_fn(lo, hi, DEFAULT_GRID_POINTS, |t| d.pdf(t))?.normalize())
}

/// Mixes regional densities with region probabilities.
pub fn compose(partition: &RegionPartition, set: &RegionalDensitySet) -> Result<Density1D> {
    if partition.len() != set.densities.len() {
        return Err(IoiError::Structural(format!(
            "{} regions but {} regional densities",
            partition.len(),
            set.densities.len()
        )));
    }
    for (i, (region, d)) in partition.regions.iter().zip(&set.densities).enumerate() {
        let inside = d.mass_between(region.lo, region.hi);
        if inside < 1.0 - REGION_LEAKAGE {
            return Err(IoiError::Structural(format!(
                "regional density {i} has only {inside} of its mass inside ({}, {}]",
                region.lo, region.hi
            )));
        }
    }
    if partition.len() == 1 {
        return Ok(set.densities[0].clone());
    }
    Density1D::mixture(
        partition
            .probabilities
            .iter()
            .copied()
            .zip(set.densities.iter().cloned())
            .collect(),
    )
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub p0: f64,
    /// Post-data probability of `μ ≤ ε`.
    pub region_probability: f64,
    pub partition: RegionPartition,
    pub density: Density1D,
}

/// Two-region analysis of a normal mean: bispatial probabilities for `μ ≤ ε` and
/// `μ > ε`, fiducial densities within each region, composed into one density.
pub fn ioi_pipeline(data: &DataSummary, cfg: &BispatialConfig, flag: PriorKnowledge) -> Result<PipelineResult> {
    let eps = cfg.epsilon();
    let pv = one_sided_p_value(data, eps)?;
    let region_probability = assess_region_probability(&pv, cfg)?;
    let fiducial = fiducial_density(&normal_mean_pivot(), data, flag)?;
    let regions = vec![Interval::at_most(eps), Interval::above(eps)];
    let densities = regions
        .iter()
        .map(|r| truncate_to_region(&fiducial, *r))
        .collect::<Result<Vec<_>>>()?;
    let partition = RegionPartition::new(regions, vec![region_probability, 1.0 - region_probability])?;
    let density = compose(&partition, &RegionalDensitySet { densities })?;
    Ok(PipelineResult {
        p0: pv.p0,
        region_probability,
        partition,
        density,
    })
}
