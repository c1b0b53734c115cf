//! Multi-label classification with corrected binary base classifiers.
//!
//! Binary base learners are wrapped in a randomized reference classifier
//! ([`rrc`]), which turns a support pair into class-assignment probabilities.
//! Two correction schemes build on those probabilities:
//!
//! * [`scm`]: a local soft confusion matrix estimated around the query,
//! * [`bmc`]: the Bayes metaclassifier over the base classifier's crisp output.
//!
//! Corrected (or bare) binary models are combined into multi-label ensembles
//! by binary relevance or label-pairwise decomposition ([`multilabel`]),
//! thresholded with S-Cut, scored with eleven quality criteria ([`metrics`])
//! and compared across datasets with Friedman/Wilcoxon/Holm ([`stats`]).
//! [`harness`] ties everything into a reproducible cross-validation runner.

pub mod base;
pub mod bmc;
pub mod datamodel;
mod error;
pub mod harness;
pub mod metrics;
pub mod multilabel;
pub mod rrc;
pub mod scm;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
