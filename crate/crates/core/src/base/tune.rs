use serde::{Deserialize, Serialize};

use super::{BaseLearner, SharedModel};
use crate::datamodel::{complement, fold_indices, BinaryDataset};
use crate::metrics::ConfusionCounts;
use crate::{seed, Error, Result};

/// Grid of candidate learners scored by minority-class F1 under k-fold CV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningSpec {
    pub grid: Vec<BaseLearner>,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_folds() -> usize {
    3
}

/// Mean F1 of `ds`'s minority class over a seeded `folds`-fold CV. A fold
/// with no true and no predicted minority instance scores 0.
pub fn cv_minority_f1(learner: &BaseLearner, ds: &BinaryDataset, folds: usize, seed: u64) -> Result<f64> {
    let minority = ds.minority_class();
    let parts = fold_indices(ds.len(), folds, seed)?;
    let mut total = 0.0;
    for test in &parts {
        let train = ds.subset(&complement(ds.len(), test));
        let model = learner.fit(&train)?;
        let mut counts = ConfusionCounts::default();
        for &i in test {
            counts.add(model.decide(&ds.features[i]) == minority, ds.classes[i] == minority);
        }
        total += counts.f1_or(0.0);
    }
    Ok(total / parts.len() as f64)
}

/// Picks the grid point with the highest mean minority-class F1 (first one
/// on ties) and refits it on all of `ds`.
pub fn tune(ds: &BinaryDataset, spec: &TuningSpec, seed: u64) -> Result<(BaseLearner, SharedModel)> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidArgument("empty tuning grid".into()));
    }
    if spec.folds < 2 {
        return Err(Error::InvalidArgument("tuning needs at least two folds".into()));
    }
    let folds = spec.folds.min(ds.len());
    let mut chosen = &spec.grid[0];
    if folds >= 2 && spec.grid.len() > 1 {
        let split_seed = seed::derive(seed, &[0x7475_6e65]);
        let mut best = f64::NEG_INFINITY;
        for candidate in &spec.grid {
            let score = cv_minority_f1(candidate, ds, folds, split_seed)?;
            if score > best {
                best = score;
                chosen = candidate;
            }
        }
    }
    Ok((chosen.clone(), chosen.fit(ds)?))
}
