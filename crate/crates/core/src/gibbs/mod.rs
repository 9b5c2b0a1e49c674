//! Joint post-data distributions from full conditional densities.
//!
//! Each parameter θⱼ gets its own conditional density `p(θⱼ | θ₋ⱼ, x)`, possibly
//! produced by a different inference method. When the conditionals are compatible
//! they determine a unique joint density that a Gibbs sampler reaches whatever the
//! scan order; when they are not, the sampler's limiting distribution depends on
//! the order in which coordinates are visited.

mod chain;
mod compat;
mod family;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::Density1D;
use crate::error::{IoiError, Result};

pub use chain::{default_burn_in, gibbs_run, scan_sensitivity, ChainResult, ScanSensitivity};
pub use compat::{
    check_compatibility, CompatibilityReport, JointGrid, Verdict, WorkingBox, ANALYTIC_THRESHOLD,
    APPROXIMATE_THRESHOLD, NUMERIC_THRESHOLD,
};
pub use family::{build_conditional_set, ConditionalMethod, LinearNormalConditional};

/// Which inference method produced a conditional kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Bayes,
    Fiducial,
    Bispatial,
    Other,
}

/// Conditional kernel: receives the other coordinates θ₋ⱼ in index order.
pub type Kernel = Arc<dyn Fn(&[f64]) -> Result<Density1D> + Send + Sync>;

#[derive(Clone)]
pub struct ConditionalSet {
    kernels: Vec<Kernel>,
    tags: Vec<MethodTag>,
}

impl fmt::Debug for ConditionalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConditionalSet").field("k", &self.k()).field("tags", &self.tags).finish()
    }
}

impl ConditionalSet {
    pub fn new(kernels: Vec<Kernel>, tags: Vec<MethodTag>) -> Result<Self> {
        if kernels.len() < 2 {
            return Err(IoiError::Structural(format!(
                "a conditional set needs at least 2 parameters, got {}",
                kernels.len()
            )));
        }
        if kernels.len() != tags.len() {
            return Err(IoiError::Structural(format!(
                "{} kernels but {} method tags",
                kernels.len(),
                tags.len()
            )));
        }
        Ok(ConditionalSet { kernels, tags })
    }

    /// Builds a set from closures, one per coordinate.
    pub fn from_fns<F>(kernels: Vec<F>, tags: Vec<MethodTag>) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Density1D> + Send + Sync + 'static,
    {
        ConditionalSet::new(kernels.into_iter().map(|f| Arc::new(f) as Kernel).collect(), tags)
    }

    pub fn k(&self) -> usize {
        self.kernels.len()
    }

    pub fn tags(&self) -> &[MethodTag] {
        &self.tags
    }

    /// `p(θⱼ | θ₋ⱼ)` with `j` zero-based.
    pub fn conditional(&self, j: usize, others: &[f64]) -> Result<Density1D> {
        (self.kernels[j])(others)
    }
}

/// Order in which a Gibbs sampler visits coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// Visit every coordinate once per iteration in this order (1-based).
    Sweep(Vec<usize>),
    /// Each iteration performs k updates at uniformly chosen coordinates.
    Random(u64),
}

impl ScanOrder {
    pub fn label(&self) -> String {
        match self {
            ScanOrder::Sweep(p) => format!(
                "sweep({})",
                p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            ),
            ScanOrder::Random(seed) => format!("random({seed})"),
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if let ScanOrder::Sweep(p) = self {
            let mut seen = vec![false; k];
            if p.len() != k {
                return Err(IoiError::Validation(format!("sweep {p:?} is not a permutation of 1..{k}")));
            }
            for &i in p {
                if i == 0 || i > k || seen[i - 1] {
                    return Err(IoiError::Validation(format!("sweep {p:?} is not a permutation of 1..{k}")));
                }
                seen[i - 1] = true;
            }
        }
        Ok(())
    }
}
