//! Two-parameter normal family whose conditionals come from the scalar engines.
//!
//! Given the other parameter θ₋ⱼ, parameter θⱼ is informed by a normal sample
//! summary with known variance whose mean is `offset + coef · θ₋ⱼ`. Each
//! conditional is then produced either by the fiducial engine (normal-mean pivot)
//! or by conjugate Bayesian updating.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ConditionalSet, Kernel, MethodTag};
use crate::bayes::{conjugate_normal_update, NormalPrior};
use crate::density::Density1D;
use crate::error::{IoiError, Result};
use crate::fiducial::{fiducial_density, normal_mean_pivot, DataSummary, PriorKnowledge};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ConditionalMethod {
    Fiducial {
        #[serde(default = "default_knowledge")]
        prior_knowledge: PriorKnowledge,
    },
    Bayes {
        prior: NormalPrior,
    },
}

fn default_knowledge() -> PriorKnowledge {
    PriorKnowledge::NoneOrVeryLittle
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearNormalConditional {
    #[serde(flatten)]
    pub method: ConditionalMethod,
    #[serde(default)]
    pub offset: f64,
    pub coef: f64,
    pub sigma2: f64,
    #[serde(default = "one")]
    pub n: u64,
}

fn one() -> u64 {
    1
}

impl LinearNormalConditional {
    /// Data summary seen by this parameter when the other one equals `other`.
    pub fn summary_given(&self, other: f64) -> Result<DataSummary> {
        DataSummary::new(self.offset + self.coef * other, self.n, self.sigma2)
    }

    pub fn density_given(&self, other: f64) -> Result<Density1D> {
        let data = self.summary_given(other)?;
        match &self.method {
            ConditionalMethod::Fiducial { prior_knowledge } => {
                fiducial_density(&normal_mean_pivot(), &data, *prior_knowledge)
            }
            ConditionalMethod::Bayes { prior } => conjugate_normal_update(prior, &data),
        }
    }

    pub fn tag(&self) -> MethodTag {
        match self.method {
            ConditionalMethod::Fiducial { .. } => MethodTag::Fiducial,
            ConditionalMethod::Bayes { .. } => MethodTag::Bayes,
        }
    }
}

/// Builds the two conditional kernels and probes each once so that a blocked
/// method fails here rather than mid-chain.
pub fn build_conditional_set(specs: &[LinearNormalConditional]) -> Result<ConditionalSet> {
    if specs.len() != 2 {
        return Err(IoiError::Validation(format!(
            "the linear normal family has exactly 2 parameters, got {}",
            specs.len()
        )));
    }
    for spec in specs {
        if let ConditionalMethod::Bayes { prior } = &spec.method {
            NormalPrior::new(prior.mean, prior.variance)?;
        }
        spec.density_given(0.0)?;
    }
    let kernels = specs
        .iter()
        .cloned()
        .map(|spec| Arc::new(move |others: &[f64]| spec.density_given(others[0])) as Kernel)
        .collect();
    ConditionalSet::new(kernels, specs.iter().map(LinearNormalConditional::tag).collect())
}
