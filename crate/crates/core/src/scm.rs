//! Soft confusion matrix correction.
//!
//! A validation archive stores, for every training instance, the randomized
//! classifier's class-assignment probabilities obtained from a model that
//! never saw that instance. Around a query `z` the archive is weighted by the
//! Gaussian potential `exp(-β‖z - x_k‖²)` and summarised as a local 2×2
//! confusion matrix, which then corrects the base classifier's output.

use std::sync::Arc;

use log::warn;
use serde::Serialize;

use crate::base::{BinarySoftClassifier, SharedModel, SupportPair, TrainedBinaryModel};
use crate::datamodel::{complement, fold_indices, BinaryDataset};
use crate::rrc::{rrc_probability_batch, rrc_probability_cached, RrcProbabilities};
use crate::{seed, Error, Result};

/// Added to every cell of the local confusion matrix.
pub const DEFAULT_KAPPA: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArchivePoint {
    pub x: Vec<f64>,
    pub class: usize,
    pub rrc: RrcProbabilities,
    /// Row id of the originating instance.
    pub id: usize,
}

/// Validation points plus the neighbourhood scale. Points are shared, so
/// re-scaling with [`ValidationArchive::with_beta`] is cheap.
#[derive(Clone, Debug)]
pub struct ValidationArchive {
    points: Arc<Vec<ArchivePoint>>,
    beta: f64,
}

impl ValidationArchive {
    pub fn new(points: Vec<ArchivePoint>, beta: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("validation archive is empty".into()));
        }
        check_beta(beta)?;
        Ok(ValidationArchive {
            points: Arc::new(points),
            beta,
        })
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(ValidationArchive {
            points: Arc::clone(&self.points),
            beta,
        })
    }

    pub fn points(&self) -> &[ArchivePoint] {
        &self.points
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.points.iter().filter(|p| p.class == 1).count();
        [self.len() - ones, ones]
    }

    /// Squared Euclidean distances from `z` to every archive point.
    pub fn sq_distances(&self, z: &[f64]) -> Vec<f64> {
        self.points.iter().map(|p| sq_dist(z, &p.x)).collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be finite and nonnegative, got {beta}")))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Gaussian weights divided by their largest value. Ratios of sums are
/// unchanged and distant queries cannot underflow every weight to zero.
pub(crate) fn relative_weights<'a>(sq: &[f64], beta: f64, keep: impl Fn(usize) -> bool + 'a) -> Vec<f64> {
    let nearest = sq
        .iter()
        .enumerate()
        .filter(|&(k, _)| keep(k))
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    sq.iter()
        .enumerate()
        .map(|(k, &d)| if keep(k) { (-beta * (d - nearest)).exp() } else { 0.0 })
        .collect()
}

/// Builds the archive shared by SCM and BMC, and the base model trained on
/// all of `ds`.
///
/// Each instance's support comes from the model trained on the other half
/// of a seeded twofold split.
pub fn build_archive<C>(clf: &C, ds: &BinaryDataset, beta: f64, seed: u64) -> Result<(ValidationArchive, SharedModel)>
where
    C: BinarySoftClassifier + ?Sized,
{
    if ds.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 instances to build a validation archive, got {}",
            ds.len()
        )));
    }
    check_beta(beta)?;
    let folds = fold_indices(ds.len(), 2, seed::derive(seed, &[1]))?;
    let mut supports = vec![SupportPair::new(0.5, 0.5); ds.len()];
    for (f, fold) in folds.iter().enumerate() {
        let train = ds.subset(&complement(ds.len(), fold));
        if train.class_counts().contains(&0) {
            warn!("archive fold {f} holds a single class; its responses come from a prior-only model");
        }
        let model = clf.train(&train, seed::derive(seed, &[2, f as u64]))?;
        for &r in fold {
            supports[r] = model.support(&ds.features[r]);
        }
    }
    let rrc = rrc_probability_batch(&supports)?;
    let points = (0..ds.len())
        .map(|r| ArchivePoint {
            x: ds.features[r].clone(),
            class: ds.classes[r],
            rrc: rrc[r],
            id: ds.ids[r],
        })
        .collect();
    let base = clf.train(ds, seed::derive(seed, &[3]))?;
    Ok((ValidationArchive::new(points, beta)?, base))
}

/// `eps[m][s]`: true class `m`, randomized outcome `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SoftConfusionMatrix {
    pub eps: [[f64; 2]; 2],
}

impl SoftConfusionMatrix {
    pub fn total(&self) -> f64 {
        self.eps.iter().flatten().sum()
    }

    /// `P(m | s)` from column `s`.
    pub fn conditional(&self, m: usize, s: usize) -> f64 {
        self.eps[m][s] / (self.eps[0][s] + self.eps[1][s])
    }

    /// `P(m | x) = Σ_s P(s | x) · P(m | s)`
    pub fn correct(&self, rrc: RrcProbabilities) -> SupportPair {
        let p = |m| (0..2).map(|s| rrc.get(s) * self.conditional(m, s)).sum::<f64>();
        let (p0, p1) = (p(0), p(1));
        SupportPair::new(p0 / (p0 + p1), p1 / (p0 + p1))
    }
}

#[derive(Clone, Debug)]
pub struct ScmModel {
    pub base: SharedModel,
    pub archive: ValidationArchive,
    pub kappa: f64,
}

impl ScmModel {
    pub fn new(base: SharedModel, archive: ValidationArchive) -> Self {
        ScmModel {
            base,
            archive,
            kappa: DEFAULT_KAPPA,
        }
    }

    /// Local confusion matrix given precomputed squared distances.
    pub fn confusion_from_sq(&self, sq: &[f64]) -> SoftConfusionMatrix {
        let points = self.archive.points();
        let w = relative_weights(sq, self.archive.beta, |_| true);
        let mass: f64 = w.iter().sum();
        let mut eps = [[0.0; 2]; 2];
        for (p, wk) in points.iter().zip(&w) {
            for (s, cell) in eps[p.class].iter_mut().enumerate() {
                *cell += p.rrc.get(s) * wk;
            }
        }
        for cell in eps.iter_mut().flatten() {
            *cell = *cell / mass + self.kappa;
        }
        SoftConfusionMatrix { eps }
    }

    /// Corrected posterior given the query's RRC probabilities and squared
    /// distances to the archive.
    pub fn posterior_from(&self, rrc: RrcProbabilities, sq: &[f64]) -> SupportPair {
        self.confusion_from_sq(sq).correct(rrc)
    }
}

pub fn build_scm<C>(clf: &C, ds: &BinaryDataset, beta: f64, seed: u64) -> Result<ScmModel>
where
    C: BinarySoftClassifier + ?Sized,
{
    let (archive, base) = build_archive(clf, ds, beta, seed)?;
    Ok(ScmModel::new(base, archive))
}

/// `exp(-β‖z - x_k‖²)` for every archive point.
pub fn neighborhood_memberships(z: &[f64], archive: &ValidationArchive) -> Vec<f64> {
    archive.sq_distances(z).iter().map(|d| (-archive.beta * d).exp()).collect()
}

pub fn local_confusion(z: &[f64], model: &ScmModel) -> SoftConfusionMatrix {
    model.confusion_from_sq(&model.archive.sq_distances(z))
}

pub fn corrected_posterior(x: &[f64], model: &ScmModel) -> Result<SupportPair> {
    let rrc = rrc_probability_cached(model.base.support(x))?;
    Ok(local_confusion(x, model).correct(rrc))
}

pub fn scm_decide(x: &[f64], model: &ScmModel) -> Result<usize> {
    corrected_posterior(x, model).map(|p| p.decide())
}

impl TrainedBinaryModel for ScmModel {
    fn support(&self, x: &[f64]) -> SupportPair {
        corrected_posterior(x, self).unwrap_or_else(|e| {
            warn!("SCM correction failed ({e}); using the base support");
            self.base.support(x)
        })
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "correction": "scm",
            "beta": self.archive.beta,
            "archive": self.archive.len(),
            "base": self.base.describe(),
        })
    }
}
