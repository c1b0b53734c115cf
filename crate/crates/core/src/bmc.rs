//! Bayes metaclassifier.
//!
//! The base classifier's crisp outcome `s` is treated as an observation and
//! inverted with Bayes' rule. The class-conditional `p(s | i)` at a query is a
//! Gaussian-weighted average of the archive's RRC probabilities over
//! validation points of class `i`.

use log::warn;

use crate::base::{BinarySoftClassifier, SharedModel, SupportPair, TrainedBinaryModel};
use crate::datamodel::BinaryDataset;
use crate::scm::{build_archive, relative_weights, ValidationArchive};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct BmcModel {
    pub base: SharedModel,
    pub archive: ValidationArchive,
    /// Laplace-smoothed class frequencies of the archive.
    pub priors: [f64; 2],
}

impl BmcModel {
    pub fn new(base: SharedModel, archive: ValidationArchive) -> Self {
        let [c0, c1] = archive.class_counts();
        let n = (c0 + c1) as f64;
        let priors = [(c0 as f64 + 1.0) / (n + 2.0), (c1 as f64 + 1.0) / (n + 2.0)];
        BmcModel { base, archive, priors }
    }

    /// `p(s | i)` given squared distances to the archive.
    pub fn class_conditional_from_sq(&self, sq: &[f64], s: usize, i: usize) -> Result<f64> {
        let points = self.archive.points();
        if points.iter().all(|p| p.class != i) {
            return Err(Error::ClassAbsent(i));
        }
        let w = relative_weights(sq, self.archive.beta(), |k| points[k].class == i);
        let (num, den) = points
            .iter()
            .zip(&w)
            .filter(|(p, _)| p.class == i)
            .fold((0.0, 0.0), |(n, d), (p, &wk)| (n + p.rrc.get(s) * wk, d + wk));
        Ok(num / den)
    }

    /// Posterior over the true class given the base decision `s`. Falls back
    /// to the priors when both likelihoods vanish.
    pub fn posterior_from(&self, s: usize, sq: &[f64]) -> Result<SupportPair> {
        let t0 = self.priors[0] * self.class_conditional_from_sq(sq, s, 0)?;
        let t1 = self.priors[1] * self.class_conditional_from_sq(sq, s, 1)?;
        let den = t0 + t1;
        if den > 0.0 && den.is_finite() {
            Ok(SupportPair::new(t0 / den, t1 / den))
        } else {
            warn!("BMC likelihoods vanish for outcome {s}; returning the priors");
            Ok(SupportPair::new(self.priors[0], self.priors[1]))
        }
    }
}

pub fn build_bmc<C>(clf: &C, ds: &BinaryDataset, beta: f64, seed: u64) -> Result<BmcModel>
where
    C: BinarySoftClassifier + ?Sized,
{
    let (archive, base) = build_archive(clf, ds, beta, seed)?;
    Ok(BmcModel::new(base, archive))
}

pub fn class_conditional(x: &[f64], s: usize, i: usize, model: &BmcModel) -> Result<f64> {
    model.class_conditional_from_sq(&model.archive.sq_distances(x), s, i)
}

pub fn bmc_posterior(x: &[f64], model: &BmcModel) -> Result<SupportPair> {
    model.posterior_from(model.base.decide(x), &model.archive.sq_distances(x))
}

pub fn bmc_decide(x: &[f64], model: &BmcModel) -> Result<usize> {
    bmc_posterior(x, model).map(|p| p.decide())
}

impl TrainedBinaryModel for BmcModel {
    /// The posterior, or the base support when a class is missing from the
    /// archive.
    fn support(&self, x: &[f64]) -> SupportPair {
        bmc_posterior(x, self).unwrap_or_else(|_| self.base.support(x))
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "correction": "bmc",
            "beta": self.archive.beta(),
            "archive": self.archive.len(),
            "priors": self.priors,
            "base": self.base.describe(),
        })
    }
}
