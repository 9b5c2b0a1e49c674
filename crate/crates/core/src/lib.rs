//! Post-data inference for scalar and two-parameter normal models.
//!
//! The crate builds post-data distributions from three sources and glues them
//! together:
//!
//! * [`fiducial`]: invert a pivot that keeps its pre-data distribution,
//! * [`bayes`]: conjugate and grid Bayesian updating,
//! * [`bispatial`]: region probabilities from a small one-sided P value,
//!
//! then [`composition`] mixes per-region densities with region probabilities and
//! [`gibbs`] samples joint distributions from full conditionals that may have been
//! produced by different methods. [`cli`] is the batch front end behind the `ioi`
//! binary.

pub mod bayes;
pub mod bispatial;
pub mod cli;
pub mod composition;
pub mod density;
pub mod error;
pub mod fiducial;
pub mod gibbs;
pub mod normal;
pub mod stats;

pub use density::{Density1D, SampleBatch};
pub use error::{IoiError, Result};
pub use fiducial::{DataSummary, PriorKnowledge};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
