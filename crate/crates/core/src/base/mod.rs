//! Binary soft classifiers feeding the randomized reference classifier.
//!
//! A trained model maps a feature vector to a [`SupportPair`]. Crisp
//! decisions are the argmax of the supports with ties going to class 1.
//! Any external learner can take part by implementing
//! [`BinarySoftClassifier`] and [`TrainedBinaryModel`].

mod bayes;
mod knn;
mod logistic;
mod stump;
mod tune;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use bayes::{train_gnb, GaussianNaiveBayes};
pub use knn::{train_knn, Knn};
pub use logistic::{train_logistic, Logistic};
pub use stump::{train_stump, Stump};
pub use tune::{cv_minority_f1, tune, TuningSpec};

use crate::datamodel::BinaryDataset;
use crate::{Error, Result};

/// Soft output `(ν₀, ν₁)` of a binary classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPair {
    pub nu0: f64,
    pub nu1: f64,
}

impl SupportPair {
    pub fn new(nu0: f64, nu1: f64) -> Self {
        SupportPair { nu0, nu1 }
    }

    /// `(1 - p, p)`
    pub fn from_class1(p: f64) -> Self {
        SupportPair { nu0: 1.0 - p, nu1: p }
    }

    pub fn get(&self, class: usize) -> f64 {
        if class == 0 {
            self.nu0
        } else {
            self.nu1
        }
    }

    /// Argmax; ties go to class 1.
    pub fn decide(&self) -> usize {
        usize::from(self.nu1 >= self.nu0)
    }

    pub fn swapped(&self) -> Self {
        SupportPair {
            nu0: self.nu1,
            nu1: self.nu0,
        }
    }
}

pub trait TrainedBinaryModel: Send + Sync + fmt::Debug {
    fn support(&self, x: &[f64]) -> SupportPair;

    fn decide(&self, x: &[f64]) -> usize {
        self.support(x).decide()
    }

    /// Parameters worth reporting (e.g. the tuned neighbourhood size).
    fn describe(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

pub type SharedModel = Arc<dyn TrainedBinaryModel>;

/// Something that can be trained on binary data. `seed` feeds any internal
/// resampling (hyperparameter tuning).
pub trait BinarySoftClassifier: Send + Sync {
    fn train(&self, ds: &BinaryDataset, seed: u64) -> Result<SharedModel>;
}

/// Returns the same supports everywhere. Used whenever the training data
/// holds a single class.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantModel {
    pub support: SupportPair,
}

impl TrainedBinaryModel for ConstantModel {
    fn support(&self, _x: &[f64]) -> SupportPair {
        self.support
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "constant", "nu1": self.support.nu1 })
    }
}

/// `Some(model)` when `ds` contains one class only.
fn single_class_model(ds: &BinaryDataset) -> Option<SharedModel> {
    match ds.class_counts() {
        [0, _] => Some(Arc::new(ConstantModel {
            support: SupportPair::new(0.0, 1.0),
        })),
        [_, 0] => Some(Arc::new(ConstantModel {
            support: SupportPair::new(1.0, 0.0),
        })),
        _ => None,
    }
}

fn check_nonempty(ds: &BinaryDataset) -> Result<()> {
    if ds.is_empty() {
        Err(Error::InvalidArgument("cannot train on an empty dataset".into()))
    } else {
        Ok(())
    }
}

/// Built-in learners with fixed hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLearner {
    Knn { k: usize },
    NaiveBayes {
        #[serde(default)]
        kernel: bool,
    },
    Logistic {
        #[serde(default = "default_l2")]
        l2: f64,
    },
    Stump,
}

fn default_l2() -> f64 {
    1e-3
}

impl BaseLearner {
    pub fn fit(&self, ds: &BinaryDataset) -> Result<SharedModel> {
        check_nonempty(ds)?;
        if let Some(m) = single_class_model(ds) {
            return Ok(m);
        }
        Ok(match *self {
            BaseLearner::Knn { k } => Arc::new(train_knn(ds, k)?),
            BaseLearner::NaiveBayes { kernel } => Arc::new(train_gnb(ds, kernel)?),
            BaseLearner::Logistic { l2 } => Arc::new(train_logistic(ds, l2)?),
            BaseLearner::Stump => Arc::new(train_stump(ds)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseLearner::Knn { .. } => "knn",
            BaseLearner::NaiveBayes { .. } => "nb",
            BaseLearner::Logistic { .. } => "logistic",
            BaseLearner::Stump => "stump",
        }
    }
}

/// A learner, optionally tuned by grid search before the final fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseSpec {
    pub learner: BaseLearner,
    #[serde(default)]
    pub tuning: Option<TuningSpec>,
}

impl BaseSpec {
    pub fn fixed(learner: BaseLearner) -> Self {
        BaseSpec {
            learner,
            tuning: None,
        }
    }

    /// kNN with `K ∈ {1, 3, …, 11}` chosen by threefold CV.
    pub fn knn_tuned() -> Self {
        BaseSpec {
            learner: BaseLearner::Knn { k: 1 },
            tuning: Some(TuningSpec {
                grid: [1, 3, 5, 7, 9, 11].iter().map(|&k| BaseLearner::Knn { k }).collect(),
                folds: 3,
            }),
        }
    }

    pub fn name(&self) -> String {
        match &self.tuning {
            Some(_) => format!("{}-tuned", self.learner.name()),
            None => self.learner.name().to_string(),
        }
    }
}

impl BinarySoftClassifier for BaseLearner {
    fn train(&self, ds: &BinaryDataset, _seed: u64) -> Result<SharedModel> {
        self.fit(ds)
    }
}

impl BinarySoftClassifier for BaseSpec {
    fn train(&self, ds: &BinaryDataset, seed: u64) -> Result<SharedModel> {
        match &self.tuning {
            Some(spec) => tune(ds, spec, seed).map(|(_, m)| m),
            None => self.learner.fit(ds),
        }
    }
}
